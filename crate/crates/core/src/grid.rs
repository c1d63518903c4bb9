//! Cell-centered structured mesh, vector fields on it, and the
//! Neumann-closed 7-point Laplacian.

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Uniform cell-centered box mesh. Spacings are dimensionless (physical
/// spacing divided by `length_scale`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Physical length (m) used to nondimensionalize positions.
    pub length_scale: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize, dx: f64, dy: f64, dz: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidGrid(format!(
                "cell counts must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        for (name, d) in [("dx", dx), ("dy", dy), ("dz", dz)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} must be positive, got {d}")));
            }
        }
        Ok(Grid {
            nx,
            ny,
            nz,
            dx,
            dy,
            dz,
            length_scale: 1.0,
        })
    }

    /// 1D line of `nx` cells; the transverse spacings equal `dx`.
    pub fn line(nx: usize, dx: f64) -> Result<Self> {
        Grid::new(nx, 1, 1, dx, dx, dx)
    }

    pub fn with_length_scale(mut self, length_scale: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "length scale must be positive, got {length_scale}"
            )));
        }
        self.length_scale = length_scale;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimensionless cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// Linear index of zero-based cell `(i, j, k)`; x runs fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    /// Zero-based `(i, j, k)` of a linear index.
    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    /// Center of zero-based cell `(i, j, k)`, i.e. `((i + 1/2) dx, ...)`.
    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        [
            (i as f64 + 0.5) * self.dx,
            (j as f64 + 0.5) * self.dy,
            (k as f64 + 0.5) * self.dz,
        ]
    }

    fn check(&self, other: &Grid) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny || self.nz != other.nz {
            return Err(Error::GridMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.nx, self.ny, self.nz, other.nx, other.ny, other.nz
            )));
        }
        if self.dx != other.dx || self.dy != other.dy || self.dz != other.dz {
            return Err(Error::GridMismatch("cell spacings differ".into()));
        }
        Ok(())
    }
}

/// Cell centers in canonical layout order.
pub fn cell_centers(grid: &Grid) -> Vec<Vec3> {
    (0..grid.len())
        .map(|idx| {
            let (i, j, k) = grid.coords(idx);
            grid.center(i, j, k)
        })
        .collect()
}

/// One 3-vector per cell, stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    data: Vec<Vec3>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            data: vec![vec3::ZERO; grid.len()],
        }
    }

    pub fn uniform(grid: Grid, value: Vec3) -> Self {
        VectorField {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<Vec3>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} cells, grid has {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(VectorField { grid, data })
    }

    /// Builds a field from interleaved components `[x0, y0, z0, x1, ...]`.
    pub fn from_flat(grid: Grid, flat: &[f64]) -> Result<Self> {
        let (cells, rest) = flat.as_chunks::<3>();
        if !rest.is_empty() {
            return Err(Error::GridMismatch(format!(
                "flat length {} is not a multiple of 3",
                flat.len()
            )));
        }
        Self::from_vec(grid, cells.to_vec())
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
        let data = (0..grid.len())
            .map(|idx| {
                let (i, j, k) = grid.coords(idx);
                f(grid.center(i, j, k))
            })
            .collect();
        VectorField { grid, data }
    }

    /// Normalizes every cell; fails on cells that cannot be normalized.
    pub fn normalized(mut self) -> Result<Self> {
        for (cell, v) in self.data.iter_mut().enumerate() {
            let n = vec3::norm(*v);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::DegenerateProjection { cell, norm: n });
            }
            *v = vec3::scale(1.0 / n, *v);
        }
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[Vec3] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.data
    }

    pub fn as_flat(&self) -> &[f64] {
        self.data.as_flattened()
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        self.data.as_flattened_mut()
    }

    pub fn ensure_same_grid(&self, other: &VectorField) -> Result<()> {
        self.grid.check(&other.grid)
    }

    pub(crate) fn ensure_on(&self, grid: &Grid) -> Result<()> {
        self.grid.check(grid)
    }

    /// Largest `| |v| - 1 |` over cells.
    pub fn max_norm_defect(&self) -> f64 {
        self.data
            .iter()
            .map(|v| (vec3::norm(*v) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Sum over cells of `a · b`.
    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| vec3::dot(*a, *b))
            .sum())
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.as_flat().iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// `a * self + b * other`
    pub fn lincomb(&self, a: f64, other: &VectorField, b: f64) -> Result<VectorField> {
        self.ensure_same_grid(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| vec3::add(vec3::scale(a, *x), vec3::scale(b, *y)))
            .collect();
        Ok(VectorField {
            grid: self.grid,
            data,
        })
    }
}

/// Arithmetic mean of the cell vectors.
pub fn spatial_average(field: &VectorField) -> Result<Vec3> {
    if field.is_empty() {
        return Err(Error::EmptyField);
    }
    let sum = field
        .values()
        .iter()
        .fold(vec3::ZERO, |acc, v| vec3::add(acc, *v));
    Ok(vec3::scale(1.0 / field.len() as f64, sum))
}

/// Discrete Laplacian with homogeneous Neumann closure.
pub fn apply_laplacian(grid: &Grid, field: &VectorField) -> Result<VectorField> {
    field.ensure_on(grid)?;
    let mut out = VectorField::zeros(*grid);
    laplacian_into(grid, field.values(), out.values_mut());
    Ok(out)
}

/// Slice form of [`apply_laplacian`]. Ghost cells are mirrors of the
/// adjacent interior cell, so a missing neighbor contributes nothing.
pub fn laplacian_into(grid: &Grid, src: &[Vec3], dst: &mut [Vec3]) {
    debug_assert_eq!(src.len(), grid.len());
    debug_assert_eq!(dst.len(), grid.len());
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let cx = 1.0 / (grid.dx * grid.dx);
    let cy = 1.0 / (grid.dy * grid.dy);
    let cz = 1.0 / (grid.dz * grid.dz);
    let sx = 1;
    let sy = nx;
    let sz = nx * ny;

    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = grid.index(i, j, k);
                let c = src[idx];
                let mut acc = vec3::ZERO;
                let mut add_axis = |lo: usize, hi: usize, w: f64| {
                    for d in 0..3 {
                        acc[d] += w * (src[hi][d] - 2.0 * c[d] + src[lo][d]);
                    }
                };
                if nx > 1 {
                    let lo = if i > 0 { idx - sx } else { idx };
                    let hi = if i + 1 < nx { idx + sx } else { idx };
                    add_axis(lo, hi, cx);
                }
                if ny > 1 {
                    let lo = if j > 0 { idx - sy } else { idx };
                    let hi = if j + 1 < ny { idx + sy } else { idx };
                    add_axis(lo, hi, cy);
                }
                if nz > 1 {
                    let lo = if k > 0 { idx - sz } else { idx };
                    let hi = if k + 1 < nz { idx + sz } else { idx };
                    add_axis(lo, hi, cz);
                }
                dst[idx] = acc;
            }
        }
    }
}
