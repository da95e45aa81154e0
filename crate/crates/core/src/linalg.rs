//! Small symmetric matrices (d <= 3) used for pointwise tensors.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    pub d: usize,
    pub m: [[f64; 3]; 3],
}

impl SymMatrix {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            m: [[0.0; 3]; 3],
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0)
    }

    pub fn scaled_identity(d: usize, c: f64) -> Self {
        let mut out = Self::zeros(d);
        for i in 0..d {
            out.m[i][i] = c;
        }
        out
    }

    /// Rank-one `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        let d = v.len();
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.m[i][j] = v[i] * v[j];
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    /// Overwrites both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        let mut out = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                out.m[i][j] += other.m[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        let mut out = *self;
        for i in 0..self.d {
            for j in 0..self.d {
                out.m[i][j] -= other.m[i][j];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        let mut out = *self;
        for row in out.m.iter_mut().take(self.d) {
            for v in row.iter_mut().take(self.d) {
                *v *= c;
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.m[i][i]).sum()
    }

    /// `w . A w`.
    pub fn quad(&self, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                acc += w[i] * self.m[i][j] * w[j];
            }
        }
        acc
    }

    pub fn mul_vec(&self, w: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..self.d {
            out[i] = (0..self.d).map(|j| self.m[i][j] * w[j]).sum();
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.d {
            for j in 0..self.d {
                worst = worst.max((self.m[i][j] - self.m[j][i]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.d {
            for j in 0..self.d {
                worst = worst.max(self.m[i][j].abs());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = match self.d {
            1 => vec![self.m[0][0]],
            2 => {
                let mat = Matrix2::new(self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]);
                SymmetricEigen::new(mat)
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect()
            }
            _ => {
                let mat = Matrix3::from_fn(|i, j| self.m[i][j]);
                SymmetricEigen::new(mat)
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect()
            }
        };
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Smallest eigenvalue and a unit eigenvector for it.
    pub fn min_eigenpair(&self) -> (f64, [f64; 3]) {
        match self.d {
            1 => (self.m[0][0], [1.0, 0.0, 0.0]),
            2 => {
                let mat = Matrix2::new(self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]);
                let eig = SymmetricEigen::new(mat);
                let i = eig.eigenvalues.imin();
                let v = eig.eigenvectors.column(i);
                (eig.eigenvalues[i], [v[0], v[1], 0.0])
            }
            _ => {
                let mat = Matrix3::from_fn(|i, j| self.m[i][j]);
                let eig = SymmetricEigen::new(mat);
                let i = eig.eigenvalues.imin();
                let v = eig.eigenvectors.column(i);
                (eig.eigenvalues[i], [v[0], v[1], v[2]])
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenpair().0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 0, 3.0);
        a.set(1, 1, 1.0);
        assert_eq!(a.eigenvalues(), vec![1.0, 3.0]);
        let (l, v) = a.min_eigenpair();
        assert!((l - 1.0).abs() < 1e-14);
        assert!((v[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quad_form_matches_outer() {
        let a = SymMatrix::outer(&[1.0, 2.0, -1.0]);
        assert!((a.quad(&[1.0, 0.0, 1.0]) - 0.0).abs() < 1e-15);
        assert!((a.quad(&[0.0, 1.0, 0.0]) - 4.0).abs() < 1e-15);
    }
}
