//! TOML experiment configuration.
//!
//! ```toml
//! substance = "nC4"        # preset, path to a key-value block, or a table
//! T = 330.0
//! tau = 1e10
//! n_steps = 200
//! c_gas = 249.1123
//! c_liq = 9526.8428
//!
//! [grid]
//! N = 100
//! M = 100
//! L_half = 15e-9
//! ```
//!
//! Every omitted optional key receives a default, and each default applied
//! is recorded in [`SimConfig::provenance`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ef_scheme::EfParams;
use crate::eos::{derive_eos_params, EosParams, Substance, GAS_CONSTANT, PA_PER_BAR};
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::solver::{Preconditioner, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Half-width of the domain in x; the domain is `[-L, L] x [-M h/2, M h/2]`
    /// with `h = 2 L / N`.
    pub l_half: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid2D> {
        let h = 2.0 * self.l_half / self.nx as f64;
        let grid = Grid2D::new(self.nx, self.ny, h)?;
        Ok(grid.with_origin(-self.l_half, -0.5 * grid.ly()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Liquid inside a centered square, gas outside.
    SquareDroplet {
        half_side: f64,
    },
    /// Liquid inside a centered disk, gas outside.
    Disk {
        radius: f64,
    },
    /// A snapshot written by this program.
    FromFile {
        path: PathBuf,
    },
    Uniform {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    /// Header plus one value per line.
    Text,
    /// Matrix with one grid row per line.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write a snapshot every this many steps (0 disables all but the first
    /// and last).
    pub snapshot_every: usize,
    pub formats: Vec<SnapshotFormat>,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub substance: Substance,
    pub temperature: f64,
    pub vartheta0: f64,
    pub gas_constant: f64,
    pub grid: GridConfig,
    pub n_steps: usize,
    pub c_gas: f64,
    pub c_liq: f64,
    pub bounds_factors: [f64; 2],
    pub lambda: Option<f64>,
    pub droplet_threshold: f64,
    pub initial_condition: InitialCondition,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    /// One line per default that was filled in.
    pub provenance: Vec<String>,
}

impl SimConfig {
    pub fn eos_params(&self) -> Result<EosParams> {
        derive_eos_params(
            &self.substance,
            self.temperature,
            self.vartheta0,
            self.gas_constant,
        )
    }

    pub fn ef_params(&self, eos: &EosParams) -> Result<EfParams> {
        EfParams::new(
            self.bounds_factors[0] * self.c_gas,
            self.bounds_factors[1] * self.c_liq,
            eos,
            self.lambda,
        )
    }

    pub fn build_grid(&self) -> Result<Grid2D> {
        self.grid.build()
    }

    pub fn tau(&self) -> f64 {
        self.solver.tau
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSubstance {
    Named(String),
    Inline {
        name: String,
        #[serde(rename = "Tc_K")]
        tc_k: f64,
        #[serde(rename = "Pc_bar")]
        pc_bar: f64,
        omega: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "L_half")]
    l_half: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawInitial {
    SquareDroplet { half_side: Option<f64> },
    Disk { radius: f64 },
    FromFile { path: PathBuf },
    Uniform { value: f64 },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    cg_rel_tol: Option<f64>,
    cg_max_iter: Option<usize>,
    preconditioner: Option<Preconditioner>,
    mobility: Option<f64>,
    strict: Option<bool>,
    energy_slack_rel: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    snapshot_every: Option<usize>,
    formats: Option<Vec<SnapshotFormat>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    substance: Option<RawSubstance>,
    #[serde(rename = "T")]
    temperature: Option<f64>,
    vartheta0: Option<f64>,
    #[serde(rename = "R")]
    gas_constant: Option<f64>,
    grid: Option<RawGrid>,
    tau: Option<f64>,
    n_steps: Option<usize>,
    c_gas: Option<f64>,
    c_liq: Option<f64>,
    bounds_factors: Option<[f64; 2]>,
    lambda: Option<f64>,
    droplet_threshold: Option<f64>,
    initial_condition: Option<RawInitial>,
    solver: Option<RawSolver>,
    output: Option<RawOutput>,
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Parses and validates `text`; relative paths inside resolve against the
/// directory of `origin`.
pub fn parse_config(text: &str, origin: &Path) -> Result<SimConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            path: origin.to_path_buf(),
            line,
            message: e.message().to_string(),
        }
    })?;
    let base = origin.parent().unwrap_or(Path::new("."));
    let mut provenance = Vec::new();
    let mut default =
        |key: &str, value: String| provenance.push(format!("default {key} = {value}"));

    let substance = match raw.substance.ok_or_else(|| missing("substance"))? {
        RawSubstance::Named(name) => match Substance::preset(&name) {
            Some(s) => s,
            None => {
                let path = base.join(&name);
                if path.is_file() {
                    Substance::load(&path)?
                } else {
                    return Err(Error::config(
                        "substance",
                        format!("`{name}` is neither a preset nor a readable file"),
                    ));
                }
            }
        },
        RawSubstance::Inline {
            name,
            tc_k,
            pc_bar,
            omega,
        } => Substance::new(name, tc_k, pc_bar * PA_PER_BAR, omega)
            .map_err(|e| Error::config("substance", e.to_string()))?,
    };

    let temperature = positive("T", raw.temperature.ok_or_else(|| missing("T"))?)?;
    let vartheta0 = raw.vartheta0.unwrap_or_else(|| {
        default("vartheta0", "0".into());
        0.0
    });
    if !vartheta0.is_finite() {
        return Err(Error::config("vartheta0", "must be finite"));
    }
    let gas_constant = match raw.gas_constant {
        Some(r) => positive("R", r)?,
        None => {
            default("R", GAS_CONSTANT.to_string());
            GAS_CONSTANT
        }
    };

    let raw_grid = raw.grid.ok_or_else(|| missing("grid"))?;
    let nx = raw_grid.n.ok_or_else(|| missing("grid.N"))?;
    let ny = raw_grid.m.ok_or_else(|| missing("grid.M"))?;
    if nx < 2 {
        return Err(Error::config(
            "grid.N",
            format!("need at least 2 cells, got {nx}"),
        ));
    }
    if ny < 2 {
        return Err(Error::config(
            "grid.M",
            format!("need at least 2 cells, got {ny}"),
        ));
    }
    let l_half = positive(
        "grid.L_half",
        raw_grid.l_half.ok_or_else(|| missing("grid.L_half"))?,
    )?;
    let grid = GridConfig { nx, ny, l_half };
    let h = 2.0 * l_half / nx as f64;
    let y_half = 0.5 * ny as f64 * h;

    let tau = positive("tau", raw.tau.ok_or_else(|| missing("tau"))?)?;
    let n_steps = raw.n_steps.ok_or_else(|| missing("n_steps"))?;
    let c_gas = positive("c_gas", raw.c_gas.ok_or_else(|| missing("c_gas"))?)?;
    let c_liq = positive("c_liq", raw.c_liq.ok_or_else(|| missing("c_liq"))?)?;
    if c_gas >= c_liq {
        return Err(Error::config(
            "c_liq",
            format!("must exceed c_gas = {c_gas}, got {c_liq}"),
        ));
    }

    let bounds_factors = raw.bounds_factors.unwrap_or_else(|| {
        default("bounds_factors", "[0.9, 1.1]".into());
        [0.9, 1.1]
    });
    let [lo, hi] = bounds_factors;
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(Error::config(
            "bounds_factors",
            "factors must be finite and positive",
        ));
    }
    // c_m = lo * c_gas and c_M = hi * c_liq must bracket both phases.
    if !(lo <= 1.0 && hi >= 1.0) || lo * c_gas >= hi * c_liq {
        return Err(Error::config(
            "bounds_factors",
            format!("[{lo}, {hi}] does not give c_m <= c_gas < c_liq <= c_M"),
        ));
    }

    let lambda = match raw.lambda {
        Some(l) => Some(positive("lambda", l)?),
        None => {
            default("lambda", "minimal concave value".into());
            None
        }
    };

    let droplet_threshold = match raw.droplet_threshold {
        Some(t) => t,
        None => {
            let t = 0.5 * (c_gas + c_liq);
            default("droplet_threshold", t.to_string());
            t
        }
    };
    if !(droplet_threshold > c_gas && droplet_threshold < c_liq) {
        return Err(Error::config(
            "droplet_threshold",
            format!("must lie between c_gas and c_liq, got {droplet_threshold}"),
        ));
    }

    let initial_condition = match raw.initial_condition {
        None => {
            default(
                "initial_condition",
                format!("square_droplet, half_side = {}", 0.5 * l_half),
            );
            InitialCondition::SquareDroplet {
                half_side: 0.5 * l_half,
            }
        }
        Some(RawInitial::SquareDroplet { half_side }) => {
            let half_side = match half_side {
                Some(s) => s,
                None => {
                    default("initial_condition.half_side", (0.5 * l_half).to_string());
                    0.5 * l_half
                }
            };
            positive("initial_condition.half_side", half_side)?;
            if half_side > l_half || half_side > y_half {
                return Err(Error::config(
                    "initial_condition.half_side",
                    format!("droplet of half side {half_side} exceeds the domain"),
                ));
            }
            InitialCondition::SquareDroplet { half_side }
        }
        Some(RawInitial::Disk { radius }) => {
            positive("initial_condition.radius", radius)?;
            if radius > l_half || radius > y_half {
                return Err(Error::config(
                    "initial_condition.radius",
                    format!("droplet of radius {radius} exceeds the domain"),
                ));
            }
            InitialCondition::Disk { radius }
        }
        Some(RawInitial::FromFile { path }) => InitialCondition::FromFile {
            path: base.join(path),
        },
        Some(RawInitial::Uniform { value }) => {
            if !value.is_finite() {
                return Err(Error::config("initial_condition.value", "must be finite"));
            }
            InitialCondition::Uniform { value }
        }
    };

    let rs = raw.solver.unwrap_or_default();
    let defaults = SolverConfig::default();
    let mut pick = |key: &str, given: Option<f64>, fallback: f64| {
        given.unwrap_or_else(|| {
            default(key, fallback.to_string());
            fallback
        })
    };
    let cg_rel_tol = pick("solver.cg_rel_tol", rs.cg_rel_tol, defaults.cg_rel_tol);
    let mobility = pick("solver.mobility", rs.mobility, defaults.mobility);
    let energy_slack_rel = pick(
        "solver.energy_slack_rel",
        rs.energy_slack_rel,
        defaults.energy_slack_rel,
    );
    if rs.cg_max_iter.is_none() {
        default("solver.cg_max_iter", format!("{}", 10 * nx * ny));
    }
    let preconditioner = rs.preconditioner.unwrap_or_else(|| {
        default("solver.preconditioner", "diagonal".into());
        Preconditioner::Diagonal
    });
    let strict = rs.strict.unwrap_or_else(|| {
        default("solver.strict", "false".into());
        false
    });
    let solver = SolverConfig {
        tau,
        mobility,
        cg_rel_tol,
        cg_max_iter: rs.cg_max_iter,
        preconditioner,
        strict,
        energy_slack_rel,
    };
    solver.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(format!("solver.{name}"), reason),
        other => other,
    })?;

    let ro = raw.output.unwrap_or_default();
    let directory = match ro.directory {
        Some(d) => base.join(d),
        None => {
            default("output.directory", "output".into());
            base.join("output")
        }
    };
    let snapshot_every = ro.snapshot_every.unwrap_or_else(|| {
        let every = n_steps.clamp(1, 50);
        default("output.snapshot_every", every.to_string());
        every
    });
    let formats = ro.formats.unwrap_or_else(|| {
        default("output.formats", "[\"text\"]".into());
        vec![SnapshotFormat::Text]
    });

    let cfg = SimConfig {
        substance,
        temperature,
        vartheta0,
        gas_constant,
        grid,
        n_steps,
        c_gas,
        c_liq,
        bounds_factors,
        lambda,
        droplet_threshold,
        initial_condition,
        solver,
        output: OutputConfig {
            directory,
            snapshot_every,
            formats,
        },
        provenance,
    };

    // Derived parameters must exist before anything is allocated.
    let eos = cfg
        .eos_params()
        .map_err(|e| Error::config("T", e.to_string()))?;
    cfg.ef_params(&eos)
        .map_err(|e| Error::config("bounds_factors", e.to_string()))?;
    Ok(cfg)
}

fn missing(key: &str) -> Error {
    Error::config(key, "required key is missing")
}

fn positive(key: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::config(
            key,
            format!("must be finite and positive, got {value}"),
        ))
    }
}
