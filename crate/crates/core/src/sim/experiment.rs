use std::path::PathBuf;

use serde::Serialize;

use crate::diagnostics::{discrete_energy, shape_anisotropy, AdmissibleInterval, EnergyBreakdown};
use crate::ef_scheme::EfParams;
use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::{CellField, Grid2D};
use crate::solver::{run, StepReport};

use super::config::{SimConfig, SnapshotFormat};
use super::initial::build_initial;
use super::output::{snapshot_name, write_snapshot_csv, write_snapshot_text, SeriesWriter};

/// Everything a finished run reports, also written to `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub substance: String,
    pub temperature: f64,
    pub eos: EosParams,
    pub ef: EfParams,
    pub interval: AdmissibleInterval,
    pub n_steps: usize,
    pub total_moles: f64,
    pub initial_energy: EnergyBreakdown,
    pub final_energy: EnergyBreakdown,
    /// Largest `|<c^n, 1> - c_t| / c_t` over all steps.
    pub max_mass_drift_rel: f64,
    pub mu_e_min: f64,
    pub mu_e_max: f64,
    pub c_min_overall: f64,
    pub c_max_overall: f64,
    pub admissibility_ok: bool,
    pub bounds_ok: bool,
    pub energy_monotone: bool,
    /// One entry per violated step, `step: what`.
    pub violations: Vec<String>,
    pub anisotropy_first: Option<f64>,
    pub anisotropy_last: Option<f64>,
    pub output_directory: PathBuf,
    pub provenance: Vec<String>,
    pub exit_code: i32,
}

impl RunSummary {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs the configured experiment and writes snapshots, `series.csv` and
/// `summary.json` into the output directory.
///
/// A run that finishes with recorded violations still returns `Ok`, with a
/// nonzero [`RunSummary::exit_code`].
pub fn run_experiment(cfg: &SimConfig) -> Result<RunSummary> {
    let eos = cfg.eos_params()?;
    let ef = cfg.ef_params(&eos)?;
    let grid = cfg.build_grid()?;
    let c0 = build_initial(cfg, &grid)?;
    ef.check_field(&c0)?;

    let dir = &cfg.output.directory;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write_snapshot = |step: usize, time: f64, field: &CellField| -> Result<()> {
        for format in &cfg.output.formats {
            match format {
                SnapshotFormat::Text => write_snapshot_text(
                    &dir.join(snapshot_name(step, "txt")),
                    &grid,
                    step,
                    time,
                    field,
                )?,
                SnapshotFormat::Csv => {
                    write_snapshot_csv(&dir.join(snapshot_name(step, "csv")), field)?
                }
            }
        }
        Ok(())
    };
    write_snapshot(0, 0.0, &c0)?;

    let interval = crate::diagnostics::admissible_interval(&ef, &eos)?;
    let total_moles = grid.total(&c0)?;
    let initial_energy = discrete_energy(&c0, &eos, &grid)?;
    let mut series = SeriesWriter::create(
        &dir.join("series.csv"),
        interval.mu_lower,
        interval.mu_upper,
    )?;
    series.initial(&initial_energy, &c0, total_moles)?;

    let mut tracker = Tracker::new(cfg, &grid, total_moles, &c0);
    let result = run(
        &c0,
        cfg.n_steps,
        &ef,
        &eos,
        &cfg.solver,
        &grid,
        |report, state| {
            series.record(report)?;
            tracker.observe(report, state);
            let every = cfg.output.snapshot_every;
            let last = report.step_index == cfg.n_steps;
            if last || (every > 0 && report.step_index % every == 0) {
                write_snapshot(report.step_index, report.time, state)?;
            }
            Ok(())
        },
    );
    series.finish()?;
    let out = result?;

    let summary = RunSummary {
        substance: cfg.substance.name.clone(),
        temperature: cfg.temperature,
        eos,
        ef,
        interval: out.interval,
        n_steps: out.reports.len(),
        total_moles,
        initial_energy,
        final_energy: out.reports.last().map_or(initial_energy, |r| r.energy),
        max_mass_drift_rel: tracker.mass_drift,
        mu_e_min: tracker.mu_min,
        mu_e_max: tracker.mu_max,
        c_min_overall: tracker.c_min,
        c_max_overall: tracker.c_max,
        admissibility_ok: out.reports.iter().all(|r| r.admissibility_ok),
        bounds_ok: out.reports.iter().all(|r| r.bounds_ok),
        energy_monotone: out.reports.iter().all(|r| r.energy_decreased),
        exit_code: if tracker.violations.is_empty() { 0 } else { 5 },
        violations: tracker.violations,
        anisotropy_first: tracker.aniso_first,
        anisotropy_last: tracker.aniso_last,
        output_directory: dir.clone(),
        provenance: cfg.provenance.clone(),
    };
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary is plain data");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

struct Tracker<'a> {
    grid: &'a Grid2D,
    threshold: f64,
    n_steps: usize,
    total_moles: f64,
    mass_drift: f64,
    mu_min: f64,
    mu_max: f64,
    c_min: f64,
    c_max: f64,
    violations: Vec<String>,
    aniso_first: Option<f64>,
    aniso_last: Option<f64>,
}

impl<'a> Tracker<'a> {
    fn new(cfg: &SimConfig, grid: &'a Grid2D, total_moles: f64, c0: &CellField) -> Self {
        let aniso0 = shape_anisotropy(c0, grid, cfg.droplet_threshold).ok();
        Tracker {
            grid,
            threshold: cfg.droplet_threshold,
            n_steps: cfg.n_steps,
            total_moles,
            mass_drift: 0.0,
            mu_min: f64::INFINITY,
            mu_max: f64::NEG_INFINITY,
            c_min: c0.min(),
            c_max: c0.max(),
            violations: Vec::new(),
            aniso_first: None,
            aniso_last: aniso0,
        }
    }

    fn observe(&mut self, r: &StepReport, state: &CellField) {
        let drift = (r.mass - self.total_moles).abs() / self.total_moles.abs();
        self.mass_drift = self.mass_drift.max(drift);
        self.mu_min = self.mu_min.min(r.mu_e);
        self.mu_max = self.mu_max.max(r.mu_e);
        self.c_min = self.c_min.min(r.c_min);
        self.c_max = self.c_max.max(r.c_max);
        let v = r.violations();
        if !v.is_empty() {
            self.violations
                .push(format!("{}: {}", r.step_index, v.join(", ")));
        }
        if r.step_index == 1 || r.step_index == self.n_steps {
            let a = shape_anisotropy(state, self.grid, self.threshold).ok();
            if r.step_index == 1 {
                self.aniso_first = a;
            }
            if r.step_index == self.n_steps {
                self.aniso_last = a;
            }
        }
    }
}
