//! Kraichnan drift covariance spectra and Gaussian field synthesis on the torus.
//!
//! The drift covariance is specified through its Fourier coefficients
//!
//! ```text
//! D^(k) = (I - k k^T / |k|^2) |k|^-(d + 2 alpha) rho(eta |k|),   k != 0,
//! D^(0) = 0,
//! ```
//!
//! and the real-space covariance is `D(x) = sum_k cos(k . x) D^(k)`, truncated to
//! `|k|_inf <= kmax`. Shear profiles use the one-dimensional spectrum
//! `c_k = |k|^-(1 + 2 alpha)`.
//!
//! Synthesis uses real sine/cosine pairs over the half lattice: each mode `k`
//! with first nonzero component positive carries `sqrt(2 lambda)` times
//! independent standard normals for its cosine and sine parts, along every
//! direction orthogonal to `k`. The covariance of the result is exactly the
//! truncated `D`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{spectral_index, wavevectors, FftNd};
use crate::grid::{Grid, GridField, VectorField};
use crate::linalg::SymMatrix;
use crate::rng;

/// Small-scale cutoff profile `rho` with `rho(0) = 1`, strictly decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    /// `rho(t) = exp(-t^2)`
    #[default]
    Gaussian,
    /// `rho(t) = exp(-t)`
    Exponential,
}

impl CutoffProfile {
    #[inline]
    pub fn eval(self, t: f64) -> f64 {
        match self {
            CutoffProfile::Gaussian => (-t * t).exp(),
            CutoffProfile::Exponential => (-t).exp(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "exponential" => Ok(Self::Exponential),
            other => Err(Error::config(
                "rho",
                format!("unknown cutoff profile `{other}` (expected gaussian|exponential)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub d: usize,
    pub alpha: f64,
    pub eta: f64,
    pub rho: CutoffProfile,
    pub kmax: usize,
}

impl SpectrumConfig {
    /// Validated configuration with the default gaussian cutoff.
    pub fn new(d: usize, alpha: f64, eta: f64, kmax: usize) -> Result<Self> {
        let cfg = Self {
            d,
            alpha,
            eta,
            rho: CutoffProfile::Gaussian,
            kmax,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rho(mut self, rho: CutoffProfile) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_kmax(mut self, kmax: usize) -> Self {
        self.kmax = kmax;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 2 && self.d != 3 {
            return Err(Error::config(
                "d",
                format!("must be 2 or 3, got {}", self.d),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(
                "alpha",
                format!("must lie in (0,1), got {}", self.alpha),
            ));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::config(
                "eta",
                format!("must be >= 0, got {}", self.eta),
            ));
        }
        if self.kmax < 1 {
            return Err(Error::config("kmax", "must be >= 1"));
        }
        Ok(())
    }

    /// Radial amplitude `|k|^-(d+2 alpha) rho(eta |k|)` for `|k| > 0`.
    #[inline]
    pub fn radial(&self, k_norm: f64) -> f64 {
        k_norm.powf(-(self.d as f64 + 2.0 * self.alpha)) * self.rho.eval(self.eta * k_norm)
    }

    /// Every nonzero wavevector in the truncation box.
    pub fn modes(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        let km = self.kmax as i64;
        let d = self.d;
        let side = (2 * km + 1) as usize;
        (0..side.pow(d as u32)).filter_map(move |mut idx| {
            let mut k = [0i64; 3];
            for axis in (0..d).rev() {
                k[axis] = (idx % side) as i64 - km;
                idx /= side;
            }
            (k != [0, 0, 0]).then_some(k)
        })
    }

    /// Nonzero wavevectors with first nonzero component positive.
    pub fn half_modes(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        self.modes().filter(is_positive_half)
    }
}

fn is_positive_half(k: &[i64; 3]) -> bool {
    for &c in k {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTensor {
    pub k: [i64; 3],
    pub value: SymMatrix,
}

/// Fourier coefficient `D^(k)` of the drift covariance.
pub fn eval_spectral_tensor(cfg: &SpectrumConfig, k: &[i64]) -> Result<SpectralTensor> {
    cfg.validate()?;
    if k.len() != cfg.d {
        return Err(Error::config(
            "k",
            format!("wavevector has {} components, expected {}", k.len(), cfg.d),
        ));
    }
    if k.iter().any(|c| c.unsigned_abs() as usize > cfg.kmax) {
        return Err(Error::OutsideTruncation {
            k: k.to_vec(),
            kmax: cfg.kmax,
        });
    }
    let mut kk = [0i64; 3];
    kk[..cfg.d].copy_from_slice(k);
    Ok(SpectralTensor {
        k: kk,
        value: spectral_value(cfg, &kk),
    })
}

pub(crate) fn spectral_value(cfg: &SpectrumConfig, k: &[i64; 3]) -> SymMatrix {
    let d = cfg.d;
    let k2: f64 = k[..d].iter().map(|&c| (c * c) as f64).sum();
    let mut out = SymMatrix::zeros(d);
    if k2 == 0.0 {
        return out;
    }
    let amp = cfg.radial(k2.sqrt());
    for i in 0..d {
        for j in i..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            let v = (delta - (k[i] * k[j]) as f64 / k2) * amp;
            out.set(i, j, v);
        }
    }
    out
}

/// Real-space covariance `D(x)` by direct summation over the truncation box.
pub fn eval_real_covariance(cfg: &SpectrumConfig, x: &[f64]) -> Result<SymMatrix> {
    cfg.validate()?;
    if x.len() != cfg.d {
        return Err(Error::config("x", "point dimension does not match d"));
    }
    let d = cfg.d;
    let mut out = SymMatrix::zeros(d);
    // pair k with -k: contributes 2 cos(k.x) D^(k)
    for k in cfg.half_modes() {
        let phase: f64 = (0..d).map(|i| k[i] as f64 * x[i]).sum();
        let w = 2.0 * phase.cos();
        let t = spectral_value(cfg, &k);
        for i in 0..d {
            for j in i..d {
                out.m[i][j] += w * t.m[i][j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            out.m[i][j] = out.m[j][i];
        }
    }
    Ok(out)
}

/// `D(x)` at every grid point, evaluated with one inverse FFT per tensor entry.
pub fn covariance_on_grid(cfg: &SpectrumConfig, n: usize) -> Result<Vec<SymMatrix>> {
    cfg.validate()?;
    let grid = Grid::new(n, cfg.d)?;
    grid.check_resolves(cfg.kmax)?;
    let d = cfg.d;
    let mut fft = FftNd::new(grid);
    let mut out = vec![SymMatrix::zeros(d); grid.len()];
    let tensors: Vec<([i64; 3], SymMatrix)> =
        cfg.modes().map(|k| (k, spectral_value(cfg, &k))).collect();
    let mut buf = vec![Complex64::default(); grid.len()];
    for i in 0..d {
        for j in i..d {
            buf.iter_mut().for_each(|c| *c = Complex64::default());
            for (k, t) in &tensors {
                buf[spectral_index(grid, &k[..d])] = Complex64::new(t.m[i][j], 0.0);
            }
            fft.inverse(&mut buf);
            for (idx, v) in buf.iter().enumerate() {
                out[idx].set(i, j, v.re);
            }
        }
    }
    Ok(out)
}

/// One-dimensional shear spectrum `c_k = |k|^-(1 + 2 alpha)` for `0 < |k| <= kmax`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearSpectrum {
    pub alpha: f64,
    pub kmax: usize,
}

impl ShearSpectrum {
    pub fn new(alpha: f64, kmax: usize) -> Result<Self> {
        let s = Self { alpha, kmax };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(
                "alpha",
                format!("must lie in (0,1), got {}", self.alpha),
            ));
        }
        if self.kmax < 1 {
            return Err(Error::config("kmax", "must be >= 1"));
        }
        Ok(())
    }

    /// `c_k`, zero at `k = 0` and outside the truncation.
    pub fn coefficient(&self, k: i64) -> f64 {
        if k == 0 || k.unsigned_abs() as usize > self.kmax {
            0.0
        } else {
            (k.abs() as f64).powf(-(1.0 + 2.0 * self.alpha))
        }
    }

    /// All coefficients `c_k` for `k` in `-kmax..=kmax`.
    pub fn coefficients(&self) -> Vec<(i64, f64)> {
        let km = self.kmax as i64;
        (-km..=km).map(|k| (k, self.coefficient(k))).collect()
    }

    /// Profile covariance `D_f(x) = sum_k c_k cos(k x)`.
    pub fn profile_covariance(&self, x: f64) -> f64 {
        (1..=self.kmax as i64)
            .map(|k| 2.0 * self.coefficient(k) * (k as f64 * x).cos())
            .sum()
    }

    /// Amplitude of the cosine (and of the sine) part of mode `k >= 1` in
    /// the real synthesis, `sqrt(2 c_k)`.
    pub fn mode_amplitude(&self, k: usize) -> f64 {
        (2.0 * self.coefficient(k as i64)).sqrt()
    }

    /// `K = sum_j |c_j|` over every cosine and sine amplitude of the synthesis;
    /// the sup-norm bound of a profile with `+-1` coefficients.
    pub fn amplitude_sum(&self) -> f64 {
        (1..=self.kmax).map(|k| 2.0 * self.mode_amplitude(k)).sum()
    }
}

/// Coefficient law used in a shear profile synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileCoefficients {
    /// Standard normal coefficients: a Gaussian profile.
    Gaussian,
    /// Symmetric `+-1` coefficients: a bounded profile with the same covariance.
    Rademacher,
}

/// Samples a shear profile on `n` equispaced points of `[-pi, pi)`.
pub fn sample_shear_profile<R: Rng + ?Sized>(
    shear: &ShearSpectrum,
    n: usize,
    law: ProfileCoefficients,
    rng: &mut R,
) -> Result<Vec<f64>> {
    shear.validate()?;
    Grid::new(n, 1)?.check_resolves(shear.kmax)?;
    let h = 2.0 * PI / n as f64;
    let mut profile = vec![0.0; n];
    for k in 1..=shear.kmax {
        let amp = shear.mode_amplitude(k);
        let (a, b) = match law {
            ProfileCoefficients::Gaussian => (
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ),
            ProfileCoefficients::Rademacher => (
                if rng.random::<bool>() { 1.0 } else { -1.0 },
                if rng.random::<bool>() { 1.0 } else { -1.0 },
            ),
        };
        for (j, p) in profile.iter_mut().enumerate() {
            let x = Grid { n, d: 1 }.signed(j) as f64 * h;
            let kx = k as f64 * x;
            *p += amp * (a * kx.cos() + b * kx.sin());
        }
    }
    Ok(profile)
}

/// Samples a divergence-free Gaussian velocity field with covariance `D`.
pub fn sample_velocity<R: Rng + ?Sized>(
    cfg: &SpectrumConfig,
    n: usize,
    rng: &mut R,
) -> Result<VectorField> {
    cfg.validate()?;
    let grid = Grid::new(n, cfg.d)?;
    grid.check_resolves(cfg.kmax)?;
    let d = cfg.d;
    let mut spec: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); grid.len()]; d];
    for k in cfg.half_modes() {
        let k2: f64 = k[..d].iter().map(|&c| (c * c) as f64).sum();
        let kn = k2.sqrt();
        let lambda = cfg.radial(kn);
        let amp = (2.0 * lambda).sqrt();
        let pos = spectral_index(grid, &k[..d]);
        let neg_k = [-k[0], -k[1], -k[2]];
        let neg = spectral_index(grid, &neg_k[..d]);
        for e in orthonormal_complement(&k, d) {
            let xi: f64 = rng.sample(StandardNormal);
            let zeta: f64 = rng.sample(StandardNormal);
            // xi cos(k.x) + zeta sin(k.x) = Re[(xi - i zeta) e^{ik.x}]
            let c = Complex64::new(xi, -zeta) * (0.5 * amp);
            for i in 0..d {
                spec[i][pos] += c * e[i];
                spec[i][neg] += c.conj() * e[i];
            }
        }
    }
    let mut fft = FftNd::new(grid);
    let mut components = Vec::with_capacity(d);
    for mut s in spec {
        fft.inverse(&mut s);
        let values = s.iter().map(|c| c.re).collect();
        components.push(GridField::from_values(grid, values)?);
    }
    VectorField::new(components)
}

/// Orthonormal basis of the complement of `k` in `R^d`.
fn orthonormal_complement(k: &[i64; 3], d: usize) -> Vec<[f64; 3]> {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let kn = kf.iter().map(|c| c * c).sum::<f64>().sqrt();
    if d == 2 {
        return vec![[-kf[1] / kn, kf[0] / kn, 0.0]];
    }
    let khat = [kf[0] / kn, kf[1] / kn, kf[2] / kn];
    // helper axis least aligned with k
    let mut helper = [0.0; 3];
    let axis = (0..3)
        .min_by(|&a, &b| khat[a].abs().total_cmp(&khat[b].abs()))
        .unwrap_or(0);
    helper[axis] = 1.0;
    let e1 = normalize(cross(&khat, &helper));
    let e2 = cross(&khat, &e1);
    vec![e1, e2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Largest `|k . u^(k)|` over the spectrum of a sampled vector field,
/// normalized by the number of grid points.
pub fn spectral_divergence(field: &VectorField) -> f64 {
    let grid = field.grid();
    let ks = wavevectors(grid);
    let mut fft = FftNd::new(grid);
    let mut div = vec![Complex64::default(); grid.len()];
    for (i, comp) in field.components.iter().enumerate() {
        let mut buf: Vec<Complex64> = comp
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft.forward(&mut buf);
        for (idx, b) in buf.iter().enumerate() {
            // the Nyquist plane carries no sampled energy and has no sign
            if 2 * ks[idx][i].unsigned_abs() as usize == grid.n {
                continue;
            }
            div[idx] += *b * ks[idx][i] as f64;
        }
    }
    div.iter().map(|c| c.norm()).fold(0.0, f64::max) / grid.len() as f64
}

/// Which spectrum a Gaussian sample is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpectrum {
    /// Vector drift on `T^d` with Kraichnan covariance.
    Kraichnan(SpectrumConfig),
    /// Scalar shear profile on `T` with covariance `D_f`.
    Shear(ShearSpectrum),
}

/// Gaussian sample with the prescribed covariance, reproducible from `seed`.
///
/// Returns the `d` velocity components for a Kraichnan spectrum and a single
/// one-dimensional profile for a shear spectrum.
pub fn sample_gaussian_field(
    spectrum: &FieldSpectrum,
    n: usize,
    seed: u64,
) -> Result<Vec<GridField>> {
    let mut rng = rng::seeded(seed);
    match spectrum {
        FieldSpectrum::Kraichnan(cfg) => Ok(sample_velocity(cfg, n, &mut rng)?.components),
        FieldSpectrum::Shear(shear) => {
            let profile = sample_shear_profile(shear, n, ProfileCoefficients::Gaussian, &mut rng)?;
            Ok(vec![GridField::from_values(Grid::new(n, 1)?, profile)?])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg2(alpha: f64, eta: f64, kmax: usize) -> SpectrumConfig {
        SpectrumConfig::new(2, alpha, eta, kmax).unwrap()
    }

    #[test]
    fn unit_wavevector_projects_out_x() {
        let t = eval_spectral_tensor(&cfg2(0.5, 0.0, 4), &[1, 0]).unwrap();
        assert_abs_diff_eq!(t.value.get(0, 0), 0.0);
        assert_abs_diff_eq!(t.value.get(0, 1), 0.0);
        assert_abs_diff_eq!(t.value.get(1, 1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_mode_vanishes() {
        let t = eval_spectral_tensor(&cfg2(0.3, 0.2, 4), &[0, 0]).unwrap();
        assert_eq!(t.value.max_abs(), 0.0);
    }

    #[test]
    fn gaussian_cutoff_substitution() {
        let t = eval_spectral_tensor(&cfg2(0.5, 0.5, 4), &[0, 2]).unwrap();
        let expect = (1.0 / 8.0) * (-1.0f64).exp();
        assert_abs_diff_eq!(t.value.get(0, 0), expect, epsilon = 1e-15);
        assert_abs_diff_eq!(t.value.get(1, 1), 0.0);
        assert_abs_diff_eq!(t.value.get(0, 1), 0.0);
    }

    #[test]
    fn rejects_outside_truncation_and_bad_config() {
        assert!(matches!(
            eval_spectral_tensor(&cfg2(0.5, 0.0, 4), &[5, 0]),
            Err(Error::OutsideTruncation { .. })
        ));
        assert!(SpectrumConfig::new(2, 1.5, 0.0, 4).is_err());
        assert!(SpectrumConfig::new(4, 0.5, 0.0, 4).is_err());
        assert!(SpectrumConfig::new(2, 0.5, -1.0, 4).is_err());
        assert!(SpectrumConfig::new(2, 0.5, 0.0, 0).is_err());
    }

    #[test]
    fn grid_covariance_matches_direct_sum() {
        let cfg = cfg2(0.5, 0.1, 6);
        let grid_cov = covariance_on_grid(&cfg, 16).unwrap();
        let grid = Grid::square(16);
        for idx in [0usize, 1, 17, 100, 255] {
            let x = grid.point(idx);
            let direct = eval_real_covariance(&cfg, &x[..2]).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(grid_cov[idx].get(i, j), direct.get(i, j), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn covariance_grid_rejects_aliasing() {
        assert!(matches!(
            covariance_on_grid(&cfg2(0.5, 0.0, 8), 16),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn sampled_velocity_is_spectrally_divergence_free() {
        let cfg = cfg2(0.5, 0.0, 10);
        let u = sample_velocity(&cfg, 32, &mut rng::seeded(3)).unwrap();
        assert!(spectral_divergence(&u) < 1e-14);
        let cfg3 = SpectrumConfig::new(3, 0.4, 0.0, 3).unwrap();
        let u3 = sample_velocity(&cfg3, 8, &mut rng::seeded(4)).unwrap();
        assert!(spectral_divergence(&u3) < 1e-14);
    }

    #[test]
    fn shear_coefficients() {
        let s = ShearSpectrum::new(0.5, 8).unwrap();
        assert_eq!(s.coefficient(0), 0.0);
        for k in 1..=8 {
            assert!(s.coefficient(k) > 0.0);
            assert_eq!(s.coefficient(k), s.coefficient(-k));
        }
        assert_eq!(s.coefficient(9), 0.0);
    }

    #[test]
    fn rademacher_profile_bounded_by_amplitude_sum() {
        let s = ShearSpectrum::new(0.75, 12).unwrap();
        let mut r = rng::seeded(11);
        for _ in 0..20 {
            let p = sample_shear_profile(&s, 32, ProfileCoefficients::Rademacher, &mut r).unwrap();
            let m = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(m <= s.amplitude_sum() + 1e-12);
        }
    }
}
