//! Snapshot and time-series files.
//!
//! The text snapshot is a small header followed by one value per line in
//! shortest round-trip exponent notation, so reading it back is bit-exact:
//!
//! ```text
//! # efpr snapshot
//! N 4
//! M 3
//! h 1e-9
//! x0 -2e-9
//! y0 -1.5e-9
//! step 0
//! time 0e0
//! 2.491123e2
//! ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid2D};
use crate::solver::StepReport;

const MAGIC: &str = "# efpr snapshot";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid2D,
    pub step: usize,
    pub time: f64,
    pub field: CellField,
}

pub fn snapshot_name(step: usize, ext: &str) -> String {
    format!("snapshot_{step:06}.{ext}")
}

pub fn write_snapshot_text(
    path: &Path,
    grid: &Grid2D,
    step: usize,
    time: f64,
    field: &CellField,
) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{MAGIC}").map_err(io)?;
    writeln!(w, "N {}", grid.nx).map_err(io)?;
    writeln!(w, "M {}", grid.ny).map_err(io)?;
    writeln!(w, "h {:e}", grid.h).map_err(io)?;
    writeln!(w, "x0 {:e}", grid.origin[0]).map_err(io)?;
    writeln!(w, "y0 {:e}", grid.origin[1]).map_err(io)?;
    writeln!(w, "step {step}").map_err(io)?;
    writeln!(w, "time {time:e}").map_err(io)?;
    for v in field.values() {
        writeln!(w, "{v:e}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Rows are grid lines `j = 0..M`, columns `i = 0..N`.
pub fn write_snapshot_csv(path: &Path, field: &CellField) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for row in field.values().chunks(field.nx()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut next = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((k, Ok(l))) => Ok((k + 1, l)),
            Some((k, Err(e))) => Err(parse_err(k + 1, e.to_string())),
            None => Err(parse_err(0, format!("file ends before {expect}"))),
        }
    };

    let (n, first) = next("the header")?;
    if first.trim() != MAGIC {
        return Err(parse_err(n, format!("expected `{MAGIC}`")));
    }
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (n, line) = next(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok((n, v.trim().to_string())),
            _ => Err(parse_err(n, format!("expected `{key} <value>`"))),
        }
    };
    fn num<T: std::str::FromStr>((n, v): (usize, String), path: &Path) -> Result<T> {
        v.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: n,
            message: format!("cannot parse `{v}`"),
        })
    }
    let nx: usize = num(header("N")?, path)?;
    let ny: usize = num(header("M")?, path)?;
    let h: f64 = num(header("h")?, path)?;
    let x0: f64 = num(header("x0")?, path)?;
    let y0: f64 = num(header("y0")?, path)?;
    let step: usize = num(header("step")?, path)?;
    let time: f64 = num(header("time")?, path)?;
    let grid = Grid2D::new(nx, ny, h)?.with_origin(x0, y0);

    let mut values = Vec::with_capacity(nx * ny);
    for (k, line) in lines {
        let line = line.map_err(|e| parse_err(k + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(num((k + 1, line.trim().to_string()), path)?);
    }
    let field = CellField::from_vec(nx, ny, values)?;
    Ok(Snapshot {
        grid,
        step,
        time,
        field,
    })
}

pub const SERIES_HEADER: &str =
    "step,time,F_total,F_bulk,F_gradient,mu_e,mu_lower,mu_upper,c_min,c_max,mass,cg_iters,residual";

/// Appends one line per step to `series.csv`.
pub struct SeriesWriter {
    path: PathBuf,
    out: BufWriter<File>,
    mu_lower: f64,
    mu_upper: f64,
}

impl SeriesWriter {
    pub fn create(path: &Path, mu_lower: f64, mu_upper: f64) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = SeriesWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            mu_lower,
            mu_upper,
        };
        w.line(SERIES_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| Error::io(&self.path, e))
    }

    /// Row for the initial state; the multiplier and solver columns are empty.
    pub fn initial(
        &mut self,
        energy: &crate::diagnostics::EnergyBreakdown,
        field: &CellField,
        mass: f64,
    ) -> Result<()> {
        let row = format!(
            "0,{:e},{:e},{:e},{:e},,{:e},{:e},{:e},{:e},{:e},0,",
            0.0,
            energy.total,
            energy.bulk,
            energy.gradient,
            self.mu_lower,
            self.mu_upper,
            field.min(),
            field.max(),
            mass
        );
        self.line(&row)
    }

    pub fn record(&mut self, r: &StepReport) -> Result<()> {
        let row = format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
            r.step_index,
            r.time,
            r.energy.total,
            r.energy.bulk,
            r.energy.gradient,
            r.mu_e,
            self.mu_lower,
            self.mu_upper,
            r.c_min,
            r.c_max,
            r.mass,
            r.cg_iters_1 + r.cg_iters_2,
            r.residual_1.max(r.residual_2)
        );
        self.line(&row)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}
