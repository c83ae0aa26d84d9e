//! Time stepping of the constrained semi-implicit scheme.
//!
//! Each step solves
//!
//! ```text
//! (c - c_old)/tau - kappa Lap c + nu(c_old) c = s_r(c_old) + mu_e,   <c, 1> = c_t
//! ```
//!
//! for the new density `c` and the scalar multiplier `mu_e`. The operator
//! `A = 1/tau + nu - kappa Lap` is symmetric positive definite, so the
//! bordered system is split into two SPD solves, `A y1 = c_old/tau + s_r`
//! and `A y2 = 1`, after which `mu_e = (c_t - <y1, 1>) / <y2, 1>` and
//! `c = y1 + mu_e y2`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    admissible_interval, discrete_energy, AdmissibleInterval, EnergyBreakdown,
};
use crate::ef_scheme::{
    scheme_coefficients, scheme_coefficients_unchecked, EfParams, SchemeCoefficients,
};
use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::{dot, CellField, Grid2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    #[default]
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Time step, s.
    pub tau: f64,
    /// Scales the relaxation rate; the step behaves as if `tau` were
    /// `mobility * tau`.
    pub mobility: f64,
    /// Stop once `|b - A x| <= cg_rel_tol |b|`.
    pub cg_rel_tol: f64,
    /// Defaults to `10 * cells`.
    pub cg_max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    /// Abort on the first invariant violation and refuse out-of-window
    /// input states. Otherwise violations are recorded and marching goes on.
    pub strict: bool,
    /// Energy may rise by at most `energy_slack_rel * |F(c0)|` per step
    /// before the step is flagged.
    pub energy_slack_rel: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 1.0e10,
            mobility: 1.0,
            cg_rel_tol: 1e-10,
            cg_max_iter: None,
            preconditioner: Preconditioner::Diagonal,
            strict: false,
            energy_slack_rel: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and positive, got {v}"),
                })
            }
        };
        positive("tau", self.tau)?;
        positive("mobility", self.mobility)?;
        if !(self.cg_rel_tol > 0.0 && self.cg_rel_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "cg_rel_tol",
                reason: format!("must lie in (0, 1), got {}", self.cg_rel_tol),
            });
        }
        if self.cg_max_iter == Some(0) {
            return Err(Error::InvalidParameter {
                name: "cg_max_iter",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.energy_slack_rel >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "energy_slack_rel",
                reason: format!("must be non-negative, got {}", self.energy_slack_rel),
            });
        }
        Ok(())
    }

    /// `1 / (mobility tau)`, the mass-matrix shift of the operator.
    pub fn shift(&self) -> f64 {
        1.0 / (self.mobility * self.tau)
    }
}

/// Matrix-free `A x = shift x + nu x - kappa Lap x`.
#[derive(Debug, Clone, Copy)]
pub struct Operator<'a> {
    grid: &'a Grid2D,
    nu: &'a [f64],
    kappa: f64,
    shift: f64,
}

impl<'a> Operator<'a> {
    pub fn new(grid: &'a Grid2D, nu: &'a CellField, kappa: f64, shift: f64) -> Result<Self> {
        if nu.nx() != grid.nx || nu.ny() != grid.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} cells", grid.nx, grid.ny),
                actual: format!("{}x{} cells", nu.nx(), nu.ny()),
            });
        }
        Ok(Operator {
            grid,
            nu: nu.values(),
            kappa,
            shift,
        })
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.grid.laplacian_into(x, out);
        for ((o, &xi), &nu) in out.iter_mut().zip(x).zip(self.nu) {
            *o = self.shift * xi - self.kappa * *o + nu * xi;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let h2 = self.grid.h * self.grid.h;
        let mut diag = Vec::with_capacity(self.nu.len());
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let k = i + self.grid.nx * j;
                let faces = self.grid.interior_faces(i, j) as f64;
                diag.push(self.shift + self.nu[k] + self.kappa * faces / h2);
            }
        }
        diag
    }
}

/// Applies the step operator to `c`.
pub fn apply_operator(
    c: &CellField,
    coeffs: &SchemeCoefficients,
    cfg: &SolverConfig,
    kappa: f64,
    grid: &Grid2D,
) -> Result<CellField> {
    let op = Operator::new(grid, &coeffs.nu, kappa, cfg.shift())?;
    if c.nx() != grid.nx || c.ny() != grid.ny {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} cells", grid.nx, grid.ny),
            actual: format!("{}x{} cells", c.nx(), c.ny()),
        });
    }
    let mut out = vec![0.0; c.len()];
    op.apply_into(c.values(), &mut out);
    CellField::from_vec(grid.nx, grid.ny, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub solution: CellField,
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub residual: f64,
}

/// Preconditioned conjugate gradients for the step operator.
pub fn solve_spd(
    rhs: &CellField,
    coeffs: &SchemeCoefficients,
    cfg: &SolverConfig,
    kappa: f64,
    grid: &Grid2D,
    initial_guess: Option<&CellField>,
) -> Result<CgSolution> {
    let op = Operator::new(grid, &coeffs.nu, kappa, cfg.shift())?;
    let x0 = initial_guess.map(|g| g.values());
    let (x, iterations, residual) = conjugate_gradient(&op, rhs.values(), x0, cfg)?;
    Ok(CgSolution {
        solution: CellField::from_vec(grid.nx, grid.ny, x)?,
        iterations,
        residual,
    })
}

fn conjugate_gradient(
    op: &Operator<'_>,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let max_iter = cfg.cg_max_iter.unwrap_or(10 * n);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }
    let inv_diag: Vec<f64> = match cfg.preconditioner {
        Preconditioner::Diagonal => op.diagonal().iter().map(|d| 1.0 / d).collect(),
        Preconditioner::None => vec![1.0; n],
    };

    let mut x = match x0 {
        Some(g) if g.len() == n => g.to_vec(),
        _ => vec![0.0; n],
    };
    let mut ax = vec![0.0; n];
    op.apply_into(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();

    let mut residual = dot(&r, &r).sqrt() / b_norm;
    history.push(residual);
    let mut iterations = 0;
    while residual > cfg.cg_rel_tol {
        if iterations == max_iter {
            return Err(Error::ConvergenceFailure {
                iterations,
                residual,
                history,
            });
        }
        op.apply_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        iterations += 1;
        residual = dot(&r, &r).sqrt() / b_norm;
        history.push(residual);
    }

    // Report the true residual rather than the recurrence estimate.
    op.apply_into(&x, &mut ax);
    let true_res = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    Ok((x, iterations, true_res))
}

/// Per-step record of the multiplier, energy and invariant checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// Index of the state produced by this step (1-based).
    pub step_index: usize,
    pub time: f64,
    pub mu_e: f64,
    pub energy: EnergyBreakdown,
    pub c_min: f64,
    pub c_max: f64,
    /// `<c, 1>`, mol per unit depth.
    pub mass: f64,
    pub cg_iters_1: usize,
    pub cg_iters_2: usize,
    pub residual_1: f64,
    pub residual_2: f64,
    /// `mu_e` inside the admissible interval.
    pub admissibility_ok: bool,
    /// New state inside `[c_m, c_M]`.
    pub bounds_ok: bool,
    /// `F(c_new) <= F(c_old) + slack`.
    pub energy_decreased: bool,
}

impl StepReport {
    pub fn all_ok(&self) -> bool {
        self.admissibility_ok && self.bounds_ok && self.energy_decreased
    }

    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.admissibility_ok {
            v.push("mu_e outside the admissible interval");
        }
        if !self.bounds_ok {
            v.push("density left [c_m, c_M]");
        }
        if !self.energy_decreased {
            v.push("energy increased");
        }
        v
    }
}

/// Owns the marching state: total moles, warm starts and the previous energy.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    grid: &'a Grid2D,
    eos: &'a EosParams,
    ef: &'a EfParams,
    cfg: SolverConfig,
    interval: AdmissibleInterval,
    total_moles: f64,
    energy: f64,
    energy_slack: f64,
    warm: Option<(CellField, CellField)>,
    steps_taken: usize,
}

impl<'a> Stepper<'a> {
    /// Fixes `c_t = <c0, 1>` and the energy reference `F(c0)`.
    pub fn new(
        c0: &CellField,
        grid: &'a Grid2D,
        eos: &'a EosParams,
        ef: &'a EfParams,
        cfg: SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let interval = admissible_interval(ef, eos)?;
        Self::with_interval(c0, grid, eos, ef, cfg, interval)
    }

    pub fn with_interval(
        c0: &CellField,
        grid: &'a Grid2D,
        eos: &'a EosParams,
        ef: &'a EfParams,
        cfg: SolverConfig,
        interval: AdmissibleInterval,
    ) -> Result<Self> {
        cfg.validate()?;
        let total_moles = grid.total(c0)?;
        let energy = discrete_energy(c0, eos, grid)?.total;
        Ok(Stepper {
            grid,
            eos,
            ef,
            cfg,
            interval,
            total_moles,
            energy,
            energy_slack: cfg.energy_slack_rel * energy.abs(),
            warm: None,
            steps_taken: 0,
        })
    }

    pub fn total_moles(&self) -> f64 {
        self.total_moles
    }

    pub fn interval(&self) -> AdmissibleInterval {
        self.interval
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Advances `c_old` by one step.
    pub fn step(&mut self, c_old: &CellField) -> Result<(CellField, StepReport)> {
        let coeffs = if self.cfg.strict {
            scheme_coefficients(c_old, self.ef, self.eos)?
        } else {
            scheme_coefficients_unchecked(c_old, self.ef, self.eos)?
        };
        let shift = self.cfg.shift();
        let rhs = c_old.zip_with(&coeffs.source, |c, s| shift * c + s);
        let ones = c_old.map(|_| 1.0);
        let (warm1, warm2) = match &self.warm {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        let kappa = self.eos.kappa;
        let y1 = solve_spd(&rhs, &coeffs, &self.cfg, kappa, self.grid, warm1)?;
        let y2 = solve_spd(&ones, &coeffs, &self.cfg, kappa, self.grid, warm2)?;

        let s1 = self.grid.total(&y1.solution)?;
        let s2 = self.grid.total(&y2.solution)?;
        // <A^{-1} 1, 1> > 0 for SPD A.
        assert!(
            s2 > 0.0,
            "step operator lost positive definiteness: <y2, 1> = {s2}"
        );
        let mu_e = (self.total_moles - s1) / s2;
        let c_new = y1.solution.zip_with(&y2.solution, |a, b| a + mu_e * b);

        let energy = discrete_energy(&c_new, self.eos, self.grid)?;
        let energy_decreased = energy.total <= self.energy + self.energy_slack;
        self.energy = energy.total;
        self.steps_taken += 1;

        let report = StepReport {
            step_index: self.steps_taken,
            time: self.steps_taken as f64 * self.cfg.tau,
            mu_e,
            energy,
            c_min: c_new.min(),
            c_max: c_new.max(),
            mass: self.grid.total(&c_new)?,
            cg_iters_1: y1.iterations,
            cg_iters_2: y2.iterations,
            residual_1: y1.residual,
            residual_2: y2.residual,
            admissibility_ok: self.interval.contains(mu_e),
            bounds_ok: c_new.values().iter().all(|&c| self.ef.contains(c)),
            energy_decreased,
        };
        self.warm = Some((y1.solution, y2.solution));
        Ok((c_new, report))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: CellField,
    pub reports: Vec<StepReport>,
    pub initial_energy: EnergyBreakdown,
    pub interval: AdmissibleInterval,
    pub total_moles: f64,
}

/// Marches `n_steps` from `c0`, calling `observer` after every step. An
/// observer error stops the run.
///
/// `c0` must lie in the density window. In strict mode the first step that
/// violates an invariant aborts the run with [`Error::Invariant`].
pub fn run(
    c0: &CellField,
    n_steps: usize,
    ef: &EfParams,
    eos: &EosParams,
    cfg: &SolverConfig,
    grid: &Grid2D,
    mut observer: impl FnMut(&StepReport, &CellField) -> Result<()>,
) -> Result<RunOutput> {
    ef.check_field(c0)?;
    let initial_energy = discrete_energy(c0, eos, grid)?;
    let mut stepper = Stepper::new(c0, grid, eos, ef, *cfg)?;
    let mut state = c0.clone();
    let mut reports = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let (next, report) = stepper.step(&state)?;
        observer(&report, &next)?;
        if cfg.strict && !report.all_ok() {
            return Err(Error::Invariant {
                step: report.step_index,
                what: report.violations().join(", "),
            });
        }
        reports.push(report);
        state = next;
    }
    Ok(RunOutput {
        final_state: state,
        reports,
        initial_energy,
        interval: stepper.interval(),
        total_moles: stepper.total_moles(),
    })
}
