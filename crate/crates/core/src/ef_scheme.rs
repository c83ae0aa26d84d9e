//! Energy-factorization coefficients.
//!
//! The repulsion energy is shifted by `lambda * c` and written as the square
//! of `G(c) = sqrt(lambda c - c ln(1 - beta c))`. For `lambda` at or above
//! [`minimal_lambda`], `G` is concave on the density window, and linearizing
//! `G` around the old state yields a chemical potential that is linear in the
//! new density while still bounding the energy change from above. The ideal
//! term is handled the same way through the concavity of `ln c`, and the
//! concave attraction term is explicit.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::eos::EosParams;
use crate::error::{DomainBound, Error, Result};
use crate::grid::CellField;

/// Relative slack used when testing whether a density lies in `[c_m, c_M]`.
pub const BOUNDS_REL_SLACK: f64 = 1e-10;

/// Smallest shift that keeps `G` concave whenever `beta c <= epsilon_0`.
pub fn minimal_lambda(epsilon_0: f64) -> Result<f64> {
    if !(epsilon_0 > 0.0 && epsilon_0 < 1.0) {
        return Err(Error::Domain {
            bound: DomainBound::PackingFraction,
            value: epsilon_0,
        });
    }
    let one_minus = 1.0 - epsilon_0;
    let ratio = epsilon_0 / (one_minus * one_minus);
    let radicand = ratio * ratio - 2.0 * (-epsilon_0).ln_1p() * ratio;
    Ok(ratio + radicand.sqrt())
}

/// Scheme constants: the concavity shift and the density window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfParams {
    pub lambda: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// `beta * c_max`.
    pub epsilon_0: f64,
}

impl EfParams {
    /// Builds the constants for the window `[c_min, c_max]`.
    ///
    /// `lambda` defaults to [`minimal_lambda`]; an override below that value
    /// is rejected.
    pub fn new(c_min: f64, c_max: f64, eos: &EosParams, lambda: Option<f64>) -> Result<Self> {
        if !(c_min > 0.0 && c_min.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "c_m",
                reason: format!("must be positive, got {c_min}"),
            });
        }
        if !(c_max > c_min && c_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "c_M",
                reason: format!("must exceed c_m = {c_min}, got {c_max}"),
            });
        }
        let epsilon_0 = eos.beta * c_max;
        if epsilon_0 >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "c_M",
                reason: format!("beta * c_M = {epsilon_0} must stay below 1"),
            });
        }
        let floor = minimal_lambda(epsilon_0)?;
        let lambda = match lambda {
            None => floor,
            Some(l) if l.is_finite() && l >= floor => l,
            Some(l) => {
                return Err(Error::InvalidParameter {
                    name: "lambda",
                    reason: format!("{l} is below the concavity threshold {floor}"),
                })
            }
        };
        Ok(EfParams {
            lambda,
            c_min,
            c_max,
            epsilon_0,
        })
    }

    /// Membership in `[c_m, c_M]` up to [`BOUNDS_REL_SLACK`].
    pub fn contains(&self, c: f64) -> bool {
        c >= self.c_min * (1.0 - BOUNDS_REL_SLACK) && c <= self.c_max * (1.0 + BOUNDS_REL_SLACK)
    }

    /// First cell outside the window, if any.
    pub fn check_field(&self, field: &CellField) -> Result<()> {
        match field.values().iter().position(|&c| !self.contains(c)) {
            None => Ok(()),
            Some(cell) => Err(Error::BoundsViolation {
                cell,
                value: field.values()[cell],
                lower: self.c_min,
                upper: self.c_max,
            }),
        }
    }
}

/// Returns `(G(c), G'(c))`.
pub fn g_and_gprime(c: f64, lambda: f64, eos: &EosParams) -> Result<(f64, f64)> {
    eos.check_density(c)?;
    let bc = eos.beta * c;
    let log_term = (-bc).ln_1p();
    let radicand = lambda * c - c * log_term;
    if !(radicand > 0.0) {
        return Err(Error::Domain {
            bound: DomainBound::Argument,
            value: c,
        });
    }
    let g = radicand.sqrt();
    let gprime = 0.5 / g * (lambda - log_term + bc / (1.0 - bc));
    Ok((g, gprime))
}

/// Explicit attraction chemical potential, J/mol.
pub fn mu_attraction(c: f64, eos: &EosParams) -> Result<f64> {
    eos.check_density(c)?;
    let bc = eos.beta * c;
    let log_term = ((1.0 + (1.0 - SQRT_2) * bc) / (1.0 + (1.0 + SQRT_2) * bc)).ln();
    Ok(eos.alpha / (2.0 * SQRT_2 * eos.beta) * log_term
        - eos.alpha * c / (1.0 + 2.0 * bc - bc * bc))
}

/// Implicit coefficient `nu(c) = RT (1/c + G'(c)^2)`.
pub fn nu(c: f64, ef: &EfParams, eos: &EosParams) -> Result<f64> {
    let (_, gp) = g_and_gprime(c, ef.lambda, eos)?;
    Ok(eos.rt() * (1.0 / c + gp * gp))
}

/// Explicit source `s_r(c)`, J/mol.
pub fn source(c: f64, ef: &EfParams, eos: &EosParams) -> Result<f64> {
    let (g, gp) = g_and_gprime(c, ef.lambda, eos)?;
    let rt = eos.rt();
    Ok(
        -eos.vartheta0 - rt * c.ln() + rt * (gp * gp * c - 2.0 * g * gp + ef.lambda)
            - mu_attraction(c, eos)?,
    )
}

/// Cell-wise `nu(c^n)` and `s_r(c^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeCoefficients {
    pub nu: CellField,
    pub source: CellField,
}

/// Evaluates the coefficients on every cell; cells outside `[c_m, c_M]` are
/// rejected with their index.
pub fn scheme_coefficients(
    c_old: &CellField,
    ef: &EfParams,
    eos: &EosParams,
) -> Result<SchemeCoefficients> {
    ef.check_field(c_old)?;
    scheme_coefficients_unchecked(c_old, ef, eos)
}

/// Same as [`scheme_coefficients`] without the window check; densities must
/// still lie in `(0, 1/beta)`.
pub fn scheme_coefficients_unchecked(
    c_old: &CellField,
    ef: &EfParams,
    eos: &EosParams,
) -> Result<SchemeCoefficients> {
    let n = c_old.len();
    let mut nu_vals = Vec::with_capacity(n);
    let mut src_vals = Vec::with_capacity(n);
    for (cell, &c) in c_old.values().iter().enumerate() {
        nu_vals.push(nu(c, ef, eos).map_err(|e| e.at_cell(cell))?);
        src_vals.push(source(c, ef, eos).map_err(|e| e.at_cell(cell))?);
    }
    Ok(SchemeCoefficients {
        nu: c_old.with_values(nu_vals),
        source: c_old.with_values(src_vals),
    })
}

/// Linearized ideal and repulsion potentials of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiImplicitPotentials {
    pub ideal: f64,
    pub repulsion: f64,
}

pub fn semi_implicit_potentials(
    c_old: f64,
    c_new: f64,
    ef: &EfParams,
    eos: &EosParams,
) -> Result<SemiImplicitPotentials> {
    eos.check_density(c_new)?;
    let (g, gp) = g_and_gprime(c_old, ef.lambda, eos)?;
    let rt = eos.rt();
    Ok(SemiImplicitPotentials {
        ideal: eos.vartheta0 + rt * c_old.ln() + rt * c_new / c_old,
        repulsion: rt * gp * (2.0 * g + gp * (c_new - c_old)) - ef.lambda * rt,
    })
}
