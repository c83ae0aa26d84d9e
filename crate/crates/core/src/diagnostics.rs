//! Energy, admissibility and shape diagnostics.

use serde::{Deserialize, Serialize};

use crate::ef_scheme::{nu, source, EfParams};
use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::{CellField, Grid2D};

/// Discrete total free energy split into bulk and gradient parts.
///
/// In 2D the energy is per unit depth (J/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub gradient: f64,
    pub total: f64,
}

/// `<f_b(c), 1> + kappa/2 (|dx c|^2 + |dy c|^2)`.
pub fn discrete_energy(c: &CellField, eos: &EosParams, grid: &Grid2D) -> Result<EnergyBreakdown> {
    let mut densities = Vec::with_capacity(c.len());
    for (cell, &value) in c.values().iter().enumerate() {
        densities.push(
            eos.bulk_free_energy(value)
                .map_err(|e| e.at_cell(cell))?
                .total,
        );
    }
    let bulk = grid.total(&c.with_values(densities))?;
    let dx = grid.diff_x_c(c)?;
    let dy = grid.diff_y_c(c)?;
    let gradient = 0.5 * eos.kappa * (grid.inner_x(&dx, &dx)? + grid.inner_y(&dy, &dy)?);
    Ok(EnergyBreakdown {
        bulk,
        gradient,
        total: bulk + gradient,
    })
}

/// Range of Lagrange multipliers for which the next step provably stays in
/// the density window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleInterval {
    /// `max_c (c_m nu(c) - s_r(c))`.
    pub mu_lower: f64,
    /// `min_c (c_M nu(c) - s_r(c))`.
    pub mu_upper: f64,
}

impl AdmissibleInterval {
    pub fn is_empty(&self) -> bool {
        self.mu_lower > self.mu_upper
    }

    pub fn contains(&self, mu: f64) -> bool {
        self.mu_lower <= mu && mu <= self.mu_upper
    }
}

pub const DEFAULT_SAMPLES: usize = 20_000;
const GOLDEN_REL_TOL: f64 = 1e-10;

pub fn admissible_interval(ef: &EfParams, eos: &EosParams) -> Result<AdmissibleInterval> {
    admissible_interval_with(ef, eos, DEFAULT_SAMPLES)
}

pub fn admissible_interval_with(
    ef: &EfParams,
    eos: &EosParams,
    samples: usize,
) -> Result<AdmissibleInterval> {
    let lower_fn = |c: f64| Ok(ef.c_min * nu(c, ef, eos)? - source(c, ef, eos)?);
    let upper_fn = |c: f64| Ok(ef.c_max * nu(c, ef, eos)? - source(c, ef, eos)?);
    let mu_lower = maximize(lower_fn, ef.c_min, ef.c_max, samples)?;
    let mu_upper = -maximize(
        |c| upper_fn(c).map(|v: f64| -v),
        ef.c_min,
        ef.c_max,
        samples,
    )?;
    Ok(AdmissibleInterval { mu_lower, mu_upper })
}

/// Bounds on the multiplier implied by mass conservation alone:
/// `nu(c_M) c_t/|Omega| - max s_r <= mu_e <= nu(c_m) c_t/|Omega| - min s_r`.
pub fn a_priori_bounds(
    ef: &EfParams,
    eos: &EosParams,
    total_moles: f64,
    area: f64,
) -> Result<(f64, f64)> {
    let s_max = maximize(|c| source(c, ef, eos), ef.c_min, ef.c_max, DEFAULT_SAMPLES)?;
    let s_min = -maximize(
        |c| source(c, ef, eos).map(|v| -v),
        ef.c_min,
        ef.c_max,
        DEFAULT_SAMPLES,
    )?;
    let mean = total_moles / area;
    Ok((
        nu(ef.c_max, ef, eos)? * mean - s_max,
        nu(ef.c_min, ef, eos)? * mean - s_min,
    ))
}

/// Maximum of a smooth function on `[a, b]`: uniform sampling, then a
/// golden-section search inside the bracket around the best sample.
pub fn maximize(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, samples: usize) -> Result<f64> {
    let samples = samples.max(3);
    let step = (b - a) / (samples - 1) as f64;
    let at = |k: usize| {
        if k == samples - 1 {
            b
        } else {
            a + step * k as f64
        }
    };
    let mut best_k = 0;
    let mut best = f(a)?;
    for k in 1..samples {
        let v = f(at(k))?;
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut lo = at(best_k.saturating_sub(1));
    let mut hi = at((best_k + 1).min(samples - 1));

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > GOLDEN_REL_TOL * hi.abs().max(lo.abs()) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(best.max(f1).max(f2))
}

/// Deviation of the region `{c > threshold}` from a disk.
///
/// Sums two moment ratios about the region's centroid, both zero for a
/// disk: the second-moment imbalance `|I_xx - I_yy| / (I_xx + I_yy)` and the
/// four-fold moment `|sum Re((x + iy)^4)| / sum r^4`, which picks up square
/// corners (about 0.43 for an axis-aligned square). A region covering the
/// whole grid is reported as 0.
pub fn shape_anisotropy(c: &CellField, grid: &Grid2D, threshold: f64) -> Result<f64> {
    let mut points = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if c.get(i, j) > threshold {
                points.push(grid.center(i, j));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter {
            name: "threshold",
            reason: format!("no cell exceeds {threshold}"),
        });
    }
    if points.len() == c.len() {
        return Ok(0.0);
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
    let (xc, yc) = (sx / n, sy / n);
    let (mut ixx, mut iyy, mut four_fold, mut r4) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in &points {
        let (dx, dy) = ((x - xc) / grid.h, (y - yc) / grid.h);
        let (dx2, dy2) = (dx * dx, dy * dy);
        ixx += dx2;
        iyy += dy2;
        four_fold += dx2 * dx2 - 6.0 * dx2 * dy2 + dy2 * dy2;
        r4 += (dx2 + dy2) * (dx2 + dy2);
    }
    let second = if ixx + iyy > 0.0 {
        (ixx - iyy).abs() / (ixx + iyy)
    } else {
        0.0
    };
    let fourth = if r4 > 0.0 { four_fold.abs() / r4 } else { 0.0 };
    Ok(second + fourth)
}
