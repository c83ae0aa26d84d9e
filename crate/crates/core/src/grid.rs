//! Cell-centered finite differences on a uniform 2D mesh.
//!
//! Unknowns live at cell centers `(x_{i+1/2}, y_{j+1/2})`, stored row-major
//! with flat index `i + nx * j`. Differences of cell data live on faces.
//! Face fields keep their boundary faces explicitly; differences of cell
//! data write exact zeros there, which is how the homogeneous Neumann
//! condition enters every operator below.
//!
//! Inner products carry the weight `h^2` and are reduced sequentially in
//! storage order, so every reduction in this crate is bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform mesh of square cells covering
/// `[x0, x0 + nx h] x [y0, y0 + ny h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Lower-left corner of the domain.
    pub origin: [f64; 2],
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need at least 2x2 cells, got {nx}x{ny}"),
            });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("mesh size must be positive, got {h}"),
            });
        }
        Ok(Grid2D {
            nx,
            ny,
            h,
            origin: [0.0, 0.0],
        })
    }

    pub fn with_origin(mut self, x0: f64, y0: f64) -> Self {
        self.origin = [x0, y0];
        self
    }

    pub fn lx(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn ly(&self) -> f64 {
        self.ny as f64 * self.h
    }

    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Physical center of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        )
    }

    fn check_cells(&self, c: &CellField) -> Result<()> {
        if c.nx != self.nx || c.ny != self.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} cells", self.nx, self.ny),
                actual: format!("{}x{} cells", c.nx, c.ny),
            });
        }
        Ok(())
    }

    fn check_x_faces(&self, u: &XFaceField) -> Result<()> {
        if u.nx != self.nx || u.ny != self.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("x-faces of a {}x{} grid", self.nx, self.ny),
                actual: format!("x-faces of a {}x{} grid", u.nx, u.ny),
            });
        }
        Ok(())
    }

    fn check_y_faces(&self, v: &YFaceField) -> Result<()> {
        if v.nx != self.nx || v.ny != self.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("y-faces of a {}x{} grid", self.nx, self.ny),
                actual: format!("y-faces of a {}x{} grid", v.nx, v.ny),
            });
        }
        Ok(())
    }

    /// Cell-to-x-face difference; faces on `x = 0` and `x = lx` are zero.
    pub fn diff_x_c(&self, c: &CellField) -> Result<XFaceField> {
        self.check_cells(c)?;
        let mut u = XFaceField::zeros(self.nx, self.ny);
        for j in 0..self.ny {
            for i in 1..self.nx {
                u.values[i + (self.nx + 1) * j] = (c.get(i, j) - c.get(i - 1, j)) / self.h;
            }
        }
        Ok(u)
    }

    /// Cell-to-y-face difference; faces on `y = 0` and `y = ly` are zero.
    pub fn diff_y_c(&self, c: &CellField) -> Result<YFaceField> {
        self.check_cells(c)?;
        let mut v = YFaceField::zeros(self.nx, self.ny);
        for j in 1..self.ny {
            for i in 0..self.nx {
                v.values[i + self.nx * j] = (c.get(i, j) - c.get(i, j - 1)) / self.h;
            }
        }
        Ok(v)
    }

    /// X-face-to-cell difference.
    pub fn diff_x_u(&self, u: &XFaceField) -> Result<CellField> {
        self.check_x_faces(u)?;
        let mut out = CellField::zeros(self.nx, self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.values[i + self.nx * j] = (u.get(i + 1, j) - u.get(i, j)) / self.h;
            }
        }
        Ok(out)
    }

    /// Y-face-to-cell difference.
    pub fn diff_y_v(&self, v: &YFaceField) -> Result<CellField> {
        self.check_y_faces(v)?;
        let mut out = CellField::zeros(self.nx, self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.values[i + self.nx * j] = (v.get(i, j + 1) - v.get(i, j)) / self.h;
            }
        }
        Ok(out)
    }

    /// `h^2 sum a b` over cells.
    pub fn inner(&self, a: &CellField, b: &CellField) -> Result<f64> {
        self.check_cells(a)?;
        self.check_cells(b)?;
        Ok(self.h * self.h * dot(&a.values, &b.values))
    }

    /// `h^2 sum u u'` over interior x-faces.
    pub fn inner_x(&self, a: &XFaceField, b: &XFaceField) -> Result<f64> {
        self.check_x_faces(a)?;
        self.check_x_faces(b)?;
        let mut acc = 0.0;
        for j in 0..self.ny {
            for i in 1..self.nx {
                acc += a.get(i, j) * b.get(i, j);
            }
        }
        Ok(self.h * self.h * acc)
    }

    /// `h^2 sum v v'` over interior y-faces.
    pub fn inner_y(&self, a: &YFaceField, b: &YFaceField) -> Result<f64> {
        self.check_y_faces(a)?;
        self.check_y_faces(b)?;
        let mut acc = 0.0;
        for j in 1..self.ny {
            for i in 0..self.nx {
                acc += a.get(i, j) * b.get(i, j);
            }
        }
        Ok(self.h * self.h * acc)
    }

    /// `<c, 1>`, the total amount held by a density field.
    pub fn total(&self, c: &CellField) -> Result<f64> {
        self.check_cells(c)?;
        let mut acc = 0.0;
        for &v in &c.values {
            acc += v;
        }
        Ok(self.h * self.h * acc)
    }

    /// Five-point Neumann Laplacian, assembled as the composition of the
    /// face differences.
    pub fn laplacian(&self, c: &CellField) -> Result<CellField> {
        let xx = self.diff_x_u(&self.diff_x_c(c)?)?;
        let yy = self.diff_y_v(&self.diff_y_c(c)?)?;
        Ok(xx.zip_with(&yy, |a, b| a + b))
    }

    /// Fused form of [`Grid2D::laplacian`] on raw row-major slices. Performs
    /// the same floating-point operations in the same order, so results are
    /// bit-identical to the composed operator.
    pub fn laplacian_into(&self, c: &[f64], out: &mut [f64]) {
        let (nx, ny, h) = (self.nx, self.ny, self.h);
        debug_assert_eq!(c.len(), nx * ny);
        debug_assert_eq!(out.len(), nx * ny);
        for j in 0..ny {
            let row = nx * j;
            for i in 0..nx {
                let k = row + i;
                let east = if i + 1 < nx {
                    (c[k + 1] - c[k]) / h
                } else {
                    0.0
                };
                let west = if i > 0 { (c[k] - c[k - 1]) / h } else { 0.0 };
                let north = if j + 1 < ny {
                    (c[k + nx] - c[k]) / h
                } else {
                    0.0
                };
                let south = if j > 0 { (c[k] - c[k - nx]) / h } else { 0.0 };
                out[k] = (east - west) / h + (north - south) / h;
            }
        }
    }

    /// Number of interior faces touching cell `(i, j)`; the Laplacian's
    /// diagonal is `-faces / h^2`.
    pub fn interior_faces(&self, i: usize, j: usize) -> usize {
        usize::from(i > 0)
            + usize::from(i + 1 < self.nx)
            + usize::from(j > 0)
            + usize::from(j + 1 < self.ny)
    }
}

/// Sequential left-fold dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Values at cell centers, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl CellField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self::constant(nx, ny, 0.0)
    }

    pub fn constant(nx: usize, ny: usize, value: f64) -> Self {
        CellField {
            nx,
            ny,
            values: vec![value; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", nx * ny),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "field",
                reason: format!("non-finite value at cell {k}"),
            });
        }
        Ok(CellField { nx, ny, values })
    }

    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        CellField {
            nx: grid.nx,
            ny: grid.ny,
            values,
        }
    }

    /// A field of the same shape holding `values`.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        CellField {
            nx: self.nx,
            ny: self.ny,
            values,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.nx * j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[i + self.nx * j] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &CellField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Values on vertical faces `(x_i, y_{j+1/2})`, `i = 0..=nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct XFaceField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl XFaceField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        XFaceField {
            nx,
            ny,
            values: vec![0.0; (nx + 1) * ny],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i + (self.nx + 1) * j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[i + (self.nx + 1) * j] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when both boundary columns hold exact zeros.
    pub fn satisfies_neumann(&self) -> bool {
        (0..self.ny).all(|j| self.get(0, j) == 0.0 && self.get(self.nx, j) == 0.0)
    }
}

/// Values on horizontal faces `(x_{i+1/2}, y_j)`, `j = 0..=ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct YFaceField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl YFaceField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        YFaceField {
            nx,
            ny,
            values: vec![0.0; nx * (ny + 1)],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.nx * j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[i + self.nx * j] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn satisfies_neumann(&self) -> bool {
        (0..self.nx).all(|i| self.get(i, 0) == 0.0 && self.get(i, self.ny) == 0.0)
    }
}
