use crate::error::{Error, Result};
use crate::grid::{CellField, Grid2D};

use super::config::{InitialCondition, SimConfig};
use super::output::read_snapshot;

/// Builds `c0` on `grid`. Droplets are sampled at cell centers: a cell is
/// liquid when its center lies inside the shape.
pub fn build_initial(cfg: &SimConfig, grid: &Grid2D) -> Result<CellField> {
    let (gas, liq) = (cfg.c_gas, cfg.c_liq);
    let field = match &cfg.initial_condition {
        InitialCondition::SquareDroplet { half_side } => {
            check_fits(grid, *half_side, "initial_condition.half_side")?;
            CellField::from_fn(grid, |i, j| {
                let (x, y) = grid.center(i, j);
                if x.abs() <= *half_side && y.abs() <= *half_side {
                    liq
                } else {
                    gas
                }
            })
        }
        InitialCondition::Disk { radius } => {
            check_fits(grid, *radius, "initial_condition.radius")?;
            CellField::from_fn(grid, |i, j| {
                let (x, y) = grid.center(i, j);
                if x.hypot(y) <= *radius {
                    liq
                } else {
                    gas
                }
            })
        }
        InitialCondition::Uniform { value } => CellField::constant(grid.nx, grid.ny, *value),
        InitialCondition::FromFile { path } => {
            let snap = read_snapshot(path)?;
            if snap.grid.nx != grid.nx || snap.grid.ny != grid.ny {
                return Err(Error::ShapeMismatch {
                    expected: format!("{}x{} grid", grid.nx, grid.ny),
                    actual: format!("{}x{} in {}", snap.grid.nx, snap.grid.ny, path.display()),
                });
            }
            snap.field
        }
    };
    Ok(field)
}

fn check_fits(grid: &Grid2D, extent: f64, key: &str) -> Result<()> {
    let [x0, y0] = grid.origin;
    let fits =
        -extent >= x0 && extent <= x0 + grid.lx() && -extent >= y0 && extent <= y0 + grid.ly();
    if fits {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("droplet extent {extent} exceeds the domain"),
        ))
    }
}
