//! Effective diffusion tensor of the correlation equation and empirical
//! lower bounds on it.
//!
//! For the Kraichnan drift the tensor is `a(x) = 2 kappa I + D(0) - D(x)`; for
//! the shear model it is `a_s(x, y) = 2 kappa I + D_s(0, 0) - D_s(x, y)`, which
//! is diagonal with entries `2 kappa + D_f(0) - D_f(y)` and
//! `2 kappa + D_f(0) - D_f(x)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::SymMatrix;
use crate::rng;
use crate::spectrum::{covariance_on_grid, ShearSpectrum, SpectrumConfig};

/// What a tensor field was assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TensorSource {
    Kraichnan {
        spectrum: SpectrumConfig,
    },
    Shear {
        shear: ShearSpectrum,
        mean_drift: [f64; 2],
    },
    /// Hand-specified coefficients (e.g. the identity for heat-equation checks).
    Prescribed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    values: Vec<SymMatrix>,
    kappa: f64,
    source: TensorSource,
}

impl TensorField {
    /// Spatially constant tensor, e.g. `a = I` for the plain heat equation.
    pub fn constant(grid: Grid, value: SymMatrix) -> Result<Self> {
        if value.d != grid.d {
            return Err(Error::GridMismatch(
                "tensor dimension differs from grid".into(),
            ));
        }
        Ok(Self {
            grid,
            values: vec![value; grid.len()],
            kappa: 0.0,
            source: TensorSource::Prescribed,
        })
    }

    pub fn from_values(grid: Grid, values: Vec<SymMatrix>) -> Result<Self> {
        if values.len() != grid.len() || values.iter().any(|v| v.d != grid.d) {
            return Err(Error::GridMismatch(
                "tensor values do not match grid".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            kappa: 0.0,
            source: TensorSource::Prescribed,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[SymMatrix] {
        &self.values
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &SymMatrix {
        &self.values[idx]
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn source(&self) -> &TensorSource {
        &self.source
    }

    /// `(alpha, eta, kmax)` of the underlying spectrum, when there is one.
    pub fn spectral_params(&self) -> Option<(f64, f64, usize)> {
        match self.source {
            TensorSource::Kraichnan { spectrum } => {
                Some((spectrum.alpha, spectrum.eta, spectrum.kmax))
            }
            TensorSource::Shear { shear, .. } => Some((shear.alpha, 0.0, shear.kmax)),
            TensorSource::Prescribed => None,
        }
    }

    /// Smallest eigenvalue over the whole grid.
    pub fn min_eigenvalue(&self) -> f64 {
        self.values
            .iter()
            .map(SymMatrix::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::config("kappa", format!("must be >= 0, got {kappa}")));
    }
    Ok(())
}

/// Assembles `a(x) = 2 kappa I + D(0) - D(x)` on an `n^d` grid.
pub fn assemble_tensor(cfg: &SpectrumConfig, kappa: f64, n: usize) -> Result<TensorField> {
    check_kappa(kappa)?;
    let grid = Grid::new(n, cfg.d)?;
    let cov = covariance_on_grid(cfg, n)?;
    let d0 = cov[0];
    let diffusive = SymMatrix::scaled_identity(cfg.d, 2.0 * kappa);
    let values = cov
        .iter()
        .enumerate()
        .map(|(idx, dx)| {
            if idx == 0 {
                return diffusive;
            }
            let mut a = diffusive.add(&d0.sub(dx));
            // exact symmetry
            for i in 0..cfg.d {
                for j in 0..i {
                    let v = 0.5 * (a.m[i][j] + a.m[j][i]);
                    a.set(i, j, v);
                }
            }
            a
        })
        .collect();
    Ok(TensorField {
        grid,
        values,
        kappa,
        source: TensorSource::Kraichnan { spectrum: *cfg },
    })
}

/// Assembles the shear-model tensor on an `n x n` grid. The constant
/// `v (x) v` part of the covariance enters both `D_s(0,0)` and `D_s(x,y)` and is
/// cancelled explicitly, so the result does not depend on `mean_drift` at all.
pub fn assemble_shear_tensor(
    shear: &ShearSpectrum,
    kappa: f64,
    mean_drift: &[f64],
    n: usize,
) -> Result<TensorField> {
    shear.validate()?;
    check_kappa(kappa)?;
    if mean_drift.len() != 2 {
        return Err(Error::config(
            "d",
            format!(
                "shear tensors are two-dimensional, got a {}-d drift",
                mean_drift.len()
            ),
        ));
    }
    let grid = Grid::new(n, 2)?;
    grid.check_resolves(shear.kmax)?;
    let profile: Vec<f64> = (0..n)
        .map(|j| shear.profile_covariance(grid.coord(j)))
        .collect();
    let drift = SymMatrix::outer(mean_drift);
    let cancelled = drift.sub(&drift);
    let values = (0..grid.len())
        .map(|idx| {
            let m = grid.unflatten(idx);
            let mut a = SymMatrix::scaled_identity(2, 2.0 * kappa);
            // D_s(x, y) = diag(D_f(y), D_f(x))
            a.m[0][0] += profile[0] - profile[m[1]];
            a.m[1][1] += profile[0] - profile[m[0]];
            a.add(&cancelled)
        })
        .collect();
    Ok(TensorField {
        grid,
        values,
        kappa,
        source: TensorSource::Shear {
            shear: *shear,
            mean_drift: [mean_drift[0], mean_drift[1]],
        },
    })
}

/// Minima of the bound ratio restricted to the two regimes `|x| <= eta` and
/// `|x| >= eta`. `None` marks an empty regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeMins {
    /// min of `w.a w / (|x|^{2 beta} |w|^2)` over `0 < |x| <= eta`
    pub inner: Option<f64>,
    /// min of `w.a w / (|x|^{2 beta} |w|^2)` over `|x| >= eta`
    pub outer: Option<f64>,
    /// min of `w.a w / (|x|^2 |w|^2)` over `0 < |x| <= eta`
    pub inner_quadratic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub eta: f64,
    pub kappa: f64,
    pub beta: f64,
    pub kmax: usize,
    pub grid: usize,
    pub directions: usize,
    /// Minimum over grid points `x != 0` and sampled unit directions of
    /// `w.a(x) w / |x|^{2 beta}`.
    pub empirical_c: f64,
    /// `1 ^ eta^{2 beta (alpha - 1)} kappa^{1 - beta}`, the parameter dependence
    /// multiplying the (non-explicit) constant in the lower bound.
    pub theory_factor: f64,
    pub argmin_radius: f64,
    /// Exact smallest eigenvalue at the argmin point over `|x|^{2 beta}`.
    pub argmin_eigen_ratio: f64,
    pub regime_mins: RegimeMins,
    /// Relative change of `empirical_c` when `kmax` doubles, if measured.
    pub refinement_delta: Option<f64>,
}

impl BoundReport {
    pub fn regime_label(v: Option<f64>) -> String {
        match v {
            Some(x) => format!("{x:.6e}"),
            None => "regime empty".to_string(),
        }
    }
}

/// Axis directions plus `m` uniformly random unit vectors.
pub fn probe_directions(d: usize, m: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(d + m);
    for i in 0..d {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        out.push(e);
    }
    let mut r = rng::seeded(seed);
    while out.len() < d + m {
        let mut w = [0.0; 3];
        for c in w.iter_mut().take(d) {
            *c = r.sample(StandardNormal);
        }
        let norm = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push([w[0] / norm, w[1] / norm, w[2] / norm]);
        }
    }
    out
}

/// Empirical constant in `w.a(x) w >= c |x|^{2 beta} |w|^2` over the grid.
pub fn verify_lower_bound(
    field: &TensorField,
    beta: f64,
    m: usize,
    seed: u64,
) -> Result<BoundReport> {
    let (alpha, eta, kmax) = field.spectral_params().unwrap_or((0.0, 0.0, 0));
    if !(beta >= alpha && beta <= 1.0) || beta <= 0.0 {
        return Err(Error::config(
            "beta",
            format!("must lie in [alpha, 1] = [{alpha}, 1], got {beta}"),
        ));
    }
    let grid = field.grid;
    let d = grid.d;
    let dirs = probe_directions(d, m, seed);
    let kappa = field.kappa;

    let mut best = f64::INFINITY;
    let mut best_idx = usize::MAX;
    let mut inner: Option<f64> = None;
    let mut outer: Option<f64> = None;
    let mut inner_quad: Option<f64> = None;
    for idx in 1..grid.len() {
        let r = grid.radius(idx);
        let a = &field.values[idx];
        let q = dirs
            .iter()
            .map(|w| a.quad(&w[..d]))
            .fold(f64::INFINITY, f64::min);
        let ratio = q / r.powf(2.0 * beta);
        if ratio < best {
            best = ratio;
            best_idx = idx;
        }
        if r <= eta {
            inner = Some(inner.map_or(ratio, |v| v.min(ratio)));
            let quad = q / (r * r);
            inner_quad = Some(inner_quad.map_or(quad, |v| v.min(quad)));
        }
        if r >= eta {
            outer = Some(outer.map_or(ratio, |v| v.min(ratio)));
        }
    }
    if best_idx == usize::MAX {
        return Err(Error::Degenerate(
            "grid has no points away from the origin".into(),
        ));
    }
    let r_best = grid.radius(best_idx);
    let eig = field.values[best_idx].min_eigenvalue() / r_best.powf(2.0 * beta);

    Ok(BoundReport {
        alpha,
        eta,
        kappa,
        beta,
        kmax,
        grid: grid.n,
        directions: dirs.len(),
        empirical_c: best,
        theory_factor: theory_factor(alpha, eta, kappa, beta),
        argmin_radius: r_best,
        argmin_eigen_ratio: eig,
        regime_mins: RegimeMins {
            inner,
            outer,
            inner_quadratic: inner_quad,
        },
        refinement_delta: None,
    })
}

/// `1 ^ eta^{2 beta (alpha-1)} kappa^{1-beta}` with `eta = 0` read as no cutoff.
pub fn theory_factor(alpha: f64, eta: f64, kappa: f64, beta: f64) -> f64 {
    if eta == 0.0 {
        return 1.0;
    }
    let f = eta.powf(2.0 * beta * (alpha - 1.0)) * kappa.powf(1.0 - beta);
    f.min(1.0)
}

/// Bound report at `cfg.kmax` with `refinement_delta` measured against `2 kmax`
/// on the same grid (which must resolve `2 kmax`).
pub fn verify_with_refinement(
    cfg: &SpectrumConfig,
    kappa: f64,
    n: usize,
    beta: f64,
    m: usize,
    seed: u64,
) -> Result<(BoundReport, BoundReport)> {
    let coarse = assemble_tensor(cfg, kappa, n)?;
    let fine = assemble_tensor(&cfg.with_kmax(2 * cfg.kmax), kappa, n)?;
    let mut base = verify_lower_bound(&coarse, beta, m, seed)?;
    let refined = verify_lower_bound(&fine, beta, m, seed)?;
    base.refinement_delta =
        Some((refined.empirical_c - base.empirical_c).abs() / base.empirical_c.abs());
    Ok((base, refined))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kraichnan(alpha: f64, eta: f64, kmax: usize) -> SpectrumConfig {
        SpectrumConfig::new(2, alpha, eta, kmax).unwrap()
    }

    #[test]
    fn origin_is_pure_molecular_diffusion() {
        let a = assemble_tensor(&kraichnan(0.5, 0.1, 8), 1e-3, 17).unwrap();
        assert_eq!(*a.at(0), SymMatrix::scaled_identity(2, 2e-3));
    }

    #[test]
    fn tensor_is_symmetric_even_and_psd() {
        let a = assemble_tensor(&kraichnan(0.5, 0.0, 10), 0.0, 24).unwrap();
        let grid = a.grid();
        for idx in 0..grid.len() {
            let v = a.at(idx);
            assert_eq!(v.max_asymmetry(), 0.0);
            assert!(v.min_eigenvalue() >= -1e-12, "idx {idx}");
            let m = grid.unflatten(idx);
            let refl = grid.flatten(&[(grid.n - m[0]) % grid.n, (grid.n - m[1]) % grid.n]);
            assert!(v.sub(a.at(refl)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn shear_tensor_structure() {
        let s = ShearSpectrum::new(0.5, 8).unwrap();
        let a = assemble_shear_tensor(&s, 1e-2, &[0.0, 0.0], 20).unwrap();
        assert_eq!(*a.at(0), SymMatrix::scaled_identity(2, 2e-2));
        assert!(a
            .values()
            .iter()
            .all(|v| v.get(0, 1) == 0.0 && v.get(1, 0) == 0.0));
        let with_drift = assemble_shear_tensor(&s, 1e-2, &[5.0, 5.0], 20).unwrap();
        assert_eq!(a.values(), with_drift.values());
        assert!(assemble_shear_tensor(&s, 1e-2, &[1.0, 1.0, 1.0], 20).is_err());
    }

    #[test]
    fn kappa_term_alone_bounds_ratio() {
        let a =
            TensorField::constant(Grid::square(16), SymMatrix::scaled_identity(2, 2.0)).unwrap();
        let r = verify_lower_bound(&a, 0.5, 16, 1).unwrap();
        let max_r = std::f64::consts::PI * 2f64.sqrt();
        assert!(r.empirical_c >= 2.0 / max_r - 1e-12);
    }

    #[test]
    fn empty_regime_is_reported_not_an_error() {
        let a = assemble_tensor(&kraichnan(0.5, 0.0, 8), 0.0, 17).unwrap();
        let r = verify_lower_bound(&a, 0.5, 8, 2).unwrap();
        assert!(r.regime_mins.inner.is_none());
        assert_eq!(
            BoundReport::regime_label(r.regime_mins.inner),
            "regime empty"
        );
        assert!(r.regime_mins.outer.is_some());
    }

    #[test]
    fn beta_outside_range_rejected() {
        let a = assemble_tensor(&kraichnan(0.5, 0.0, 8), 0.0, 17).unwrap();
        assert!(verify_lower_bound(&a, 0.4, 8, 2).is_err());
        assert!(verify_lower_bound(&a, 1.1, 8, 2).is_err());
    }

    #[test]
    fn theory_factor_limits() {
        assert_eq!(theory_factor(0.5, 0.0, 0.0, 0.5), 1.0);
        assert_eq!(theory_factor(0.5, 0.1, 0.0, 0.5), 0.0);
        assert_eq!(theory_factor(0.5, 0.1, 1.0, 0.5), 1.0);
    }
}
