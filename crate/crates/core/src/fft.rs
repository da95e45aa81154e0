//! Multi-dimensional complex FFTs on `n^d` periodic grids, built from
//! `rustfft` line transforms. Forward transforms use `exp(-i k x)`, inverse
//! transforms `exp(+i k x)`; neither is normalized.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

pub struct FftNd {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FftNd {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid,
            forward,
            inverse,
            line: vec![Complex64::default(); grid.len()],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let plan = self.forward.clone();
        self.transform(data, plan.as_ref());
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let plan = self.inverse.clone();
        self.transform(data, plan.as_ref());
    }

    fn transform(&mut self, data: &mut [Complex64], plan: &dyn Fft<f64>) {
        let n = self.grid.n;
        let d = self.grid.d;
        assert_eq!(data.len(), self.grid.len());
        // last axis is contiguous
        plan.process_with_scratch(data, &mut self.scratch);
        for axis in 0..d.saturating_sub(1) {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            // gather every line along `axis` into contiguous storage
            let mut pos = 0;
            for outer in 0..data.len() / block {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for j in 0..n {
                        self.line[pos + j] = data[base + j * stride];
                    }
                    pos += n;
                }
            }
            plan.process_with_scratch(&mut self.line, &mut self.scratch);
            let mut pos = 0;
            for outer in 0..data.len() / block {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for j in 0..n {
                        data[base + j * stride] = self.line[pos + j];
                    }
                    pos += n;
                }
            }
        }
    }
}

/// Signed integer wavevector of every flat spectral index.
pub fn wavevectors(grid: Grid) -> Vec<[i64; 3]> {
    (0..grid.len())
        .map(|idx| {
            let m = grid.unflatten(idx);
            let mut k = [0i64; 3];
            for axis in 0..grid.d {
                k[axis] = grid.wavenumber(m[axis]);
            }
            k
        })
        .collect()
}

/// Flat spectral index of an integer wavevector with `|k_i| < n/2`.
pub fn spectral_index(grid: Grid, k: &[i64]) -> usize {
    let n = grid.n as i64;
    k.iter()
        .take(grid.d)
        .fold(0usize, |acc, &ki| acc * grid.n + ki.rem_euclid(n) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_lands_on_its_wavevector() {
        let grid = Grid::new(8, 3).unwrap();
        let k = [1i64, -2, 3];
        let mut data: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let x = grid.point(idx);
                let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        let mut fft = FftNd::new(grid);
        fft.forward(&mut data);
        let target = spectral_index(grid, &k);
        for (idx, v) in data.iter().enumerate() {
            let expect = if idx == target {
                grid.len() as f64
            } else {
                0.0
            };
            assert!(
                (v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-9,
                "idx {idx}: {v}"
            );
        }
        fft.inverse(&mut data);
        let x = grid.point(5);
        let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
        assert!((data[5].re / grid.len() as f64 - phase.cos()).abs() < 1e-9);
    }
}
