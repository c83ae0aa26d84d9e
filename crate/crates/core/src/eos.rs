//! Peng-Robinson thermodynamics of a single species.
//!
//! Everything here is SI: kelvin, pascal, mol/m^3, joule. Densities are the
//! primal variable; there is no pressure-to-density root solve.

use std::f64::consts::SQRT_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DomainBound, Error, Result};

/// Universal gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314_462_618_153_24;

/// Pascal per bar.
pub const PA_PER_BAR: f64 = 1.0e5;

/// Largest admissible `beta * c` before free-energy terms are refused.
pub const COVOLUME_GUARD: f64 = 1.0 - 1.0e-12;

/// Critical data of one pure species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substance {
    pub name: String,
    /// Critical temperature, K.
    pub critical_temperature: f64,
    /// Critical pressure, Pa.
    pub critical_pressure: f64,
    pub acentric_factor: f64,
}

impl Substance {
    pub fn new(
        name: impl Into<String>,
        critical_temperature: f64,
        critical_pressure: f64,
        acentric_factor: f64,
    ) -> Result<Self> {
        let substance = Substance {
            name: name.into(),
            critical_temperature,
            critical_pressure,
            acentric_factor,
        };
        substance.validate()?;
        Ok(substance)
    }

    /// n-butane: Tc = 425.2 K, Pc = 38.0 bar, omega = 0.199.
    pub fn n_butane() -> Self {
        Substance {
            name: "nC4".to_string(),
            critical_temperature: 425.2,
            critical_pressure: 38.0 * PA_PER_BAR,
            acentric_factor: 0.199,
        }
    }

    /// Looks up a built-in species by (case-insensitive) name.
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nc4" | "n-butane" | "butane" => Some(Self::n_butane()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("Tc_K", self.critical_temperature)?;
        check_positive("Pc_bar", self.critical_pressure)?;
        if !self.acentric_factor.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("must be finite, got {}", self.acentric_factor),
            });
        }
        Ok(())
    }

    /// Parses a key-value block such as
    ///
    /// ```text
    /// name   = nC4
    /// Tc_K   = 425.2
    /// Pc_bar = 38.0
    /// omega  = 0.199
    /// ```
    ///
    /// `:` is accepted in place of `=`, `#` starts a comment.
    pub fn parse_key_value(text: &str, origin: &Path) -> Result<Self> {
        let mut name = None;
        let mut tc = None;
        let mut pc_bar = None;
        let mut omega = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once(['=', ':']) else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: line_no,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            let number = || {
                value.parse::<f64>().map_err(|e| Error::Parse {
                    path: origin.to_path_buf(),
                    line: line_no,
                    message: format!("`{key}`: {e}"),
                })
            };
            match key {
                "name" => name = Some(value.to_string()),
                "Tc_K" => tc = Some(number()?),
                "Pc_bar" => pc_bar = Some(number()?),
                "omega" => omega = Some(number()?),
                other => {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let missing = |key: &str| Error::config(key, "missing from substance block");
        Substance::new(
            name.ok_or_else(|| missing("name"))?,
            tc.ok_or_else(|| missing("Tc_K"))?,
            pc_bar.ok_or_else(|| missing("Pc_bar"))? * PA_PER_BAR,
            omega.ok_or_else(|| missing("omega"))?,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_key_value(&text, path)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and positive, got {value}"),
        });
    }
    Ok(())
}

/// Temperature-dependent constants entering every energy formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EosParams {
    pub temperature: f64,
    pub gas_constant: f64,
    /// Ideal energy parameter, J/mol.
    pub vartheta0: f64,
    pub m: f64,
    /// Attraction parameter, Pa m^6 mol^-2.
    pub alpha: f64,
    /// Covolume, m^3/mol.
    pub beta: f64,
    /// Influence parameter of the gradient energy. The correlation's
    /// constants carry no stated units; the value is used as produced from
    /// SI inputs.
    pub kappa: f64,
}

/// Acentric-factor polynomial; the first branch covers `omega <= 0.49`.
pub fn m_from_acentric(omega: f64) -> f64 {
    if omega <= 0.49 {
        0.37464 + 1.54226 * omega - 0.26992 * omega * omega
    } else {
        0.379642 + 1.485030 * omega - 0.164423 * omega * omega + 0.016666 * omega.powi(3)
    }
}

/// Derives `m`, `alpha`, `beta` and `kappa` from critical data.
pub fn derive_eos_params(
    substance: &Substance,
    temperature: f64,
    vartheta0: f64,
    gas_constant: f64,
) -> Result<EosParams> {
    substance.validate()?;
    check_positive("T", temperature)?;
    check_positive("R", gas_constant)?;
    if !vartheta0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "vartheta0",
            reason: format!("must be finite, got {vartheta0}"),
        });
    }
    let tc = substance.critical_temperature;
    let pc = substance.critical_pressure;
    let omega = substance.acentric_factor;
    let tr = temperature / tc;

    let m = m_from_acentric(omega);
    let alpha_factor = 1.0 + m * (1.0 - tr.sqrt());
    let alpha = 0.45724 * gas_constant * gas_constant * tc * tc / pc * alpha_factor * alpha_factor;
    let beta = 0.07780 * gas_constant * tc / pc;

    let a0 = -1.0e-16 / (1.2326 + 1.3757 * omega);
    let a1 = 1.0e-16 / (0.9051 + 1.5410 * omega);
    let kappa = alpha * beta.powf(2.0 / 3.0) * (a0 * (1.0 - tr) + a1);

    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: format!("influence parameter is not positive ({kappa:e}) at T = {temperature}"),
        });
    }

    Ok(EosParams {
        temperature,
        gas_constant,
        vartheta0,
        m,
        alpha,
        beta,
        kappa,
    })
}

/// The three contributions to the bulk Helmholtz free energy density, J/m^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyParts {
    pub ideal: f64,
    pub repulsion: f64,
    pub attraction: f64,
    pub total: f64,
}

impl EosParams {
    pub fn rt(&self) -> f64 {
        self.gas_constant * self.temperature
    }

    /// Checks `0 < c` and `beta c <= 1 - 1e-12`.
    pub fn check_density(&self, c: f64) -> Result<()> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain {
                bound: DomainBound::NonPositiveDensity,
                value: c,
            });
        }
        if !(self.beta * c <= COVOLUME_GUARD) {
            return Err(Error::Domain {
                bound: DomainBound::CovolumeLimit,
                value: c,
            });
        }
        Ok(())
    }

    pub fn bulk_free_energy(&self, c: f64) -> Result<FreeEnergyParts> {
        self.check_density(c)?;
        let rt = self.rt();
        let bc = self.beta * c;
        let ideal = c * self.vartheta0 + c * rt * c.ln();
        let repulsion = -c * rt * (-bc).ln_1p();
        let attraction = self.alpha * c / (2.0 * SQRT_2 * self.beta)
            * ((1.0 + (1.0 - SQRT_2) * bc) / (1.0 + (1.0 + SQRT_2) * bc)).ln();
        Ok(FreeEnergyParts {
            ideal,
            repulsion,
            attraction,
            total: ideal + repulsion + attraction,
        })
    }

    /// Exact bulk chemical potential `f_b'(c)`, J/mol.
    pub fn bulk_chemical_potential(&self, c: f64) -> Result<f64> {
        self.check_density(c)?;
        let rt = self.rt();
        let bc = self.beta * c;
        let ideal = self.vartheta0 + rt * c.ln() + rt;
        let repulsion = rt * (-(-bc).ln_1p() + bc / (1.0 - bc));
        // d/dc of the logarithm's prefactor c plus c times d/dc of the log.
        let log_term = ((1.0 + (1.0 - SQRT_2) * bc) / (1.0 + (1.0 + SQRT_2) * bc)).ln();
        let d_log = (1.0 - SQRT_2) * self.beta / (1.0 + (1.0 - SQRT_2) * bc)
            - (1.0 + SQRT_2) * self.beta / (1.0 + (1.0 + SQRT_2) * bc);
        let attraction = self.alpha / (2.0 * SQRT_2 * self.beta) * (log_term + c * d_log);
        Ok(ideal + repulsion + attraction)
    }

    /// Peng-Robinson pressure, Pa.
    pub fn pressure(&self, c: f64) -> Result<f64> {
        self.check_density(c)?;
        let bc = self.beta * c;
        Ok(c * self.rt() / (1.0 - bc) - self.alpha * c * c / (1.0 + 2.0 * bc - bc * bc))
    }

    pub fn reduced_temperature(&self, substance: &Substance) -> f64 {
        self.temperature / substance.critical_temperature
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C_GAS: f64 = 249.1123;
    const C_LIQ: f64 = 9526.8428;

    fn nc4_330() -> EosParams {
        derive_eos_params(&Substance::n_butane(), 330.0, 0.0, GAS_CONSTANT).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn butane_covolume() {
        let p = nc4_330();
        assert!(rel(p.beta, 7.2381e-5) < 1e-4, "beta = {}", p.beta);
        // Independent of temperature.
        let hot = derive_eos_params(&Substance::n_butane(), 500.0, 0.0, GAS_CONSTANT).unwrap();
        assert_eq!(hot.beta, p.beta);
    }

    #[test]
    fn m_at_zero_acentric_factor() {
        assert_eq!(m_from_acentric(0.0), 0.37464);
    }

    #[test]
    fn m_branch_switch() {
        let first = 0.37464 + 1.54226 * 0.49 - 0.26992 * 0.49 * 0.49;
        assert_eq!(m_from_acentric(0.49), first);
        let second =
            0.379642 + 1.485030 * 0.49 - 0.164423 * 0.49 * 0.49 + 0.016666 * 0.49f64.powi(3);
        assert!((first - second).abs() < 5e-3);
        assert!((m_from_acentric(0.49 + 1e-12) - second).abs() < 1e-9);
    }

    #[test]
    fn butane_at_330k_matches_high_precision_oracle() {
        // Frozen from a 40-digit evaluation of the correlations.
        let p = nc4_330();
        assert!(rel(p.m, 0.67086063808) < 1e-12);
        assert!(rel(p.alpha, 1.753_659_458_697_660_7) < 1e-12);
        assert!(rel(p.beta, 7.238_081_039_673_035e-5) < 1e-12);
        assert!(rel(p.kappa, 2.060_797_375_061_624_7e-19) < 1e-12);
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let mut s = Substance::n_butane();
        s.acentric_factor = f64::NAN;
        assert!(matches!(
            derive_eos_params(&s, 330.0, 0.0, GAS_CONSTANT),
            Err(Error::InvalidParameter { name: "omega", .. })
        ));
        assert!(
            derive_eos_params(&Substance::n_butane(), f64::INFINITY, 0.0, GAS_CONSTANT).is_err()
        );
        assert!(derive_eos_params(&Substance::n_butane(), -1.0, 0.0, GAS_CONSTANT).is_err());
        assert!(Substance::new("x", 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn free_energy_vanishes_at_low_density() {
        let p = nc4_330();
        let tiny = p.bulk_free_energy(1e-9).unwrap();
        let unit = p.bulk_free_energy(1.0).unwrap();
        assert!(tiny.ideal.abs() < 1e-4);
        assert!(tiny.repulsion.abs() < 1e-6 * unit.repulsion.abs());
        assert!(tiny.attraction.abs() < 1e-6 * unit.attraction.abs());
    }

    #[test]
    fn ideal_part_is_zero_at_unit_density() {
        let p = nc4_330();
        assert_eq!(p.bulk_free_energy(1.0).unwrap().ideal, 0.0);
    }

    #[test]
    fn liquid_free_energy_matches_oracle() {
        let parts = nc4_330().bulk_free_energy(C_LIQ).unwrap();
        assert!(rel(parts.ideal, 239_486_581.763_066_07) < 1e-12);
        assert!(rel(parts.repulsion, 30_577_102.641_256_485) < 1e-12);
        assert!(rel(parts.attraction, -107_431_688.851_691_51) < 1e-12);
        assert!(rel(parts.total, 162_631_995.552_631_05) < 1e-12);
    }

    #[test]
    fn domain_errors_name_the_bound() {
        let p = nc4_330();
        assert!(matches!(
            p.bulk_free_energy(0.0),
            Err(Error::Domain {
                bound: DomainBound::NonPositiveDensity,
                ..
            })
        ));
        assert!(matches!(
            p.pressure(1.0 / p.beta),
            Err(Error::Domain {
                bound: DomainBound::CovolumeLimit,
                ..
            })
        ));
        assert!(p.bulk_chemical_potential(-3.0).is_err());
    }

    #[test]
    fn chemical_potential_without_attraction() {
        let mut p = nc4_330();
        p.alpha = 0.0;
        p.vartheta0 = 12.5;
        let rt = p.rt();
        for &c in &[1.0, 300.0, 5000.0, 10_000.0] {
            let bc = p.beta * c;
            let expected =
                p.vartheta0 + rt * c.ln() + rt - rt * (1.0 - bc).ln() + rt * bc / (1.0 - bc);
            assert!(rel(p.bulk_chemical_potential(c).unwrap(), expected) < 1e-13);
        }
    }

    #[test]
    fn chemical_potential_matches_finite_differences() {
        let p = nc4_330();
        for k in 0..200 {
            let c = 0.9 * C_GAS + (1.1 * C_LIQ - 0.9 * C_GAS) * k as f64 / 199.0;
            let d = 1e-6 * c;
            let fd = (p.bulk_free_energy(c + d).unwrap().total
                - p.bulk_free_energy(c - d).unwrap().total)
                / (2.0 * d);
            let mu = p.bulk_chemical_potential(c).unwrap();
            assert!(rel(fd, mu) < 1e-6, "c={c}: fd={fd} mu={mu}");
        }
    }

    #[test]
    fn coexisting_phases_share_potential_and_pressure() {
        let p = nc4_330();
        let (mg, ml) = (
            p.bulk_chemical_potential(C_GAS).unwrap(),
            p.bulk_chemical_potential(C_LIQ).unwrap(),
        );
        // Oracle: 17132.956434 and 17132.957185 J/mol.
        assert!(rel(mg, 17_132.956_434_347_513) < 1e-10);
        assert!(rel(ml, 17_132.957_184_671_147) < 1e-10);
        assert!((mg - ml).abs() / mg.abs() <= 0.02);

        let (pg, pl) = (p.pressure(C_GAS).unwrap(), p.pressure(C_LIQ).unwrap());
        // Oracle: 5.9099 bar for both phases.
        assert!(rel(pg, 590_986.300_349_623_2) < 1e-10);
        assert!(rel(pl, 590_994.244_861_536_3) < 1e-10);
        assert!((pg - pl).abs() / pg <= 0.05);
    }

    #[test]
    fn quoted_packing_fractions() {
        let p = nc4_330();
        assert!((p.beta * C_GAS - 0.0180).abs() < 1e-3);
        assert!((p.beta * C_LIQ - 0.6896).abs() < 1e-3);
    }

    #[test]
    fn ideal_gas_limit() {
        let p = nc4_330();
        let c = 1e-5 / p.beta;
        let ideal = c * p.rt();
        assert!(rel(p.pressure(c).unwrap(), ideal) < 1e-3);
    }

    #[test]
    fn attraction_term_is_concave() {
        let p = nc4_330();
        for k in 1..1000 {
            let c = (0.999 / p.beta) * k as f64 / 1000.0;
            let d = 1e-3 * c;
            let f = |x: f64| p.bulk_free_energy(x).unwrap().attraction;
            let second = f(c + d) - 2.0 * f(c) + f(c - d);
            assert!(second <= 1e-9 * f(c).abs(), "c={c}: {second}");
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let p = nc4_330();
        let a = p.bulk_free_energy(4321.0).unwrap();
        let b = p.bulk_free_energy(4321.0).unwrap();
        assert_eq!(a.total.to_bits(), b.total.to_bits());
        assert_eq!(
            p.pressure(4321.0).unwrap().to_bits(),
            p.pressure(4321.0).unwrap().to_bits()
        );
    }

    #[test]
    fn parses_substance_block() {
        let text = "# butane\nname = nC4\nTc_K = 425.2\nPc_bar: 38.0\nomega = 0.199\n";
        let s = Substance::parse_key_value(text, Path::new("inline")).unwrap();
        assert_eq!(s, Substance::n_butane());

        let err = Substance::parse_key_value("name = x\nTc_K = abc\n", Path::new("f")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Substance::parse_key_value("name = x\nTc_K = 1\nPc_bar = 1\n", Path::new("f"))
            .unwrap_err();
        assert!(err.to_string().contains("omega"));
    }
}
