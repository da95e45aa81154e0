//! Uniform periodic grids on the torus `[-pi, pi)^d` and fields living on them.
//!
//! Grid index `j` along an axis sits at `j * h` with `h = 2 pi / n`, folded back
//! into `[-pi, pi)`. Index 0 is therefore always the origin, which is where the
//! correlation function is read off. Storage is row-major with the last axis
//! fastest, matching the FFT layout used throughout the crate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub d: usize,
}

impl Grid {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(
                "grid",
                format!("resolution must be >= 2, got {n}"),
            ));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::config(
                "d",
                format!("dimension must be 1, 2 or 3, got {d}"),
            ));
        }
        Ok(Self { n, d })
    }

    /// Shorthand for the 2-d grids used by the solvers.
    pub fn square(n: usize) -> Self {
        Self { n, d: 2 }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `h^d`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Volume of the torus, `(2 pi)^d`.
    #[inline]
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.d as i32)
    }

    /// Signed index in `(-n/2, n/2]` folded so that `j >= n/2` maps to `j - n`.
    #[inline]
    pub fn signed(&self, j: usize) -> i64 {
        if 2 * j >= self.n {
            j as i64 - self.n as i64
        } else {
            j as i64
        }
    }

    /// Coordinate of axis index `j` in `[-pi, pi)`.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        self.signed(j) as f64 * self.spacing()
    }

    /// Multi-index of a flat index (only the first `d` entries are meaningful).
    #[inline]
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.d).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    #[inline]
    pub fn flatten(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .take(self.d)
            .fold(0usize, |acc, &j| acc * self.n + j)
    }

    /// Flat index of `idx` translated by the (signed) grid vector `shift`, periodically.
    #[inline]
    pub fn offset(&self, idx: usize, shift: &[i64]) -> usize {
        let m = self.unflatten(idx);
        let n = self.n as i64;
        let mut out = 0usize;
        for axis in 0..self.d {
            let j = (m[axis] as i64 + shift[axis]).rem_euclid(n) as usize;
            out = out * self.n + j;
        }
        out
    }

    /// Physical point of a flat index.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.unflatten(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.coord(m[axis]);
        }
        x
    }

    /// Euclidean norm of the representative of a grid point in `[-pi, pi)^d`.
    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.point(idx);
        x[..self.d].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Integer wavenumber associated with FFT index `j`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        self.signed(j)
    }

    /// Smallest grid that resolves `|k|_inf <= kmax` without aliasing.
    pub fn min_resolution(kmax: usize) -> usize {
        2 * kmax + 1
    }

    pub fn check_resolves(&self, kmax: usize) -> Result<()> {
        let required = Self::min_resolution(kmax);
        if self.n < required {
            return Err(Error::Aliasing {
                n: self.n,
                kmax,
                required,
            });
        }
        Ok(())
    }
}

/// Scalar field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let x = grid.point(idx);
                f(&x[..grid.d])
            })
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at the origin (flat index 0).
    #[inline]
    pub fn at_origin(&self) -> f64 {
        self.values[0]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Discrete `||f||_{L^2}^2 = h^d sum f^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
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

    /// Field translated by a grid vector: `out(x) = self(x - shift h)`.
    pub fn translated(&self, shift: &[i64]) -> Self {
        let neg: Vec<i64> = shift.iter().map(|s| -s).collect();
        let values = (0..self.grid.len())
            .map(|idx| self.values[self.grid.offset(idx, &neg)])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Field reflected through the origin: `out(x) = self(-x)`.
    pub fn reflected(&self) -> Self {
        let values = (0..self.grid.len())
            .map(|idx| {
                let m = self.grid.unflatten(idx);
                let mut r = [0usize; 3];
                for axis in 0..self.grid.d {
                    r[axis] = (self.grid.n - m[axis]) % self.grid.n;
                }
                self.values[self.grid.flatten(&r[..self.grid.d])]
            })
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Vector field with `d` scalar components on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: Vec<GridField>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: (0..grid.d).map(|_| GridField::zeros(grid)).collect(),
        }
    }

    pub fn new(components: Vec<GridField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Degenerate("vector field with no components".into()));
        };
        let grid = first.grid();
        if components.len() != grid.d || components.iter().any(|c| c.grid() != grid) {
            return Err(Error::GridMismatch(
                "vector components must match the grid dimension".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    pub fn component(&self, i: usize) -> &GridField {
        &self.components[i]
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_speed(&self) -> f64 {
        let len = self.grid().len();
        (0..len)
            .map(|idx| {
                self.components
                    .iter()
                    .map(|c| c.values()[idx].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest pointwise `sum_i |u_i|`, the quantity entering the CFL bound.
    pub fn max_l1_speed(&self) -> f64 {
        let len = self.grid().len();
        (0..len)
            .map(|idx| {
                self.components
                    .iter()
                    .map(|c| c.values()[idx].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            components: self.components.iter().map(|f| f.scaled(c)).collect(),
        }
    }

    pub fn translated(&self, shift: &[i64]) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|f| f.translated(shift))
                .collect(),
        }
    }
}
