//! Correlated-in-time drifts built from piecewise-constant segments.
//!
//! A flow with correlation time `eps` is `u^eps(t, x) = eps^-1/2 u_j(x)` on
//! `[(j-1) eps, j eps)`, with `u_1, u_2, ...` independent. Integrated over one
//! segment it has covariance `eps * D`, so every model has the same
//! white-in-time normalization as the Kraichnan drift it approximates.
//!
//! Segments are never stored up front: segment `j` is re-derived on demand
//! from `derive(seed, j)`, which keeps long white-in-time runs cheap in memory
//! and makes a flow bit-reproducible from its parameters alone.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, VectorField};
use crate::linalg::SymMatrix;
use crate::rng;
use crate::spectrum::{
    sample_shear_profile, sample_velocity, CutoffProfile, ProfileCoefficients, ShearSpectrum,
    SpectrumConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowModel {
    /// `Z f_J` with `J` drawn from a [`ModeTable`].
    SmoothMode,
    /// A single Gaussian shear, vertical or horizontal with equal odds.
    OrientedShear,
    /// Bounded shears in both directions plus a random diagonal drift.
    BoundedShearDrift,
    /// Full Kraichnan samples renewed every time step.
    WhiteKraichnan,
    /// Gaussian shears in both directions renewed every time step.
    WhiteShear,
    /// No drift at all; a control for the transport solver.
    Zero,
    /// One fixed velocity field for all times.
    Steady,
}

impl FlowModel {
    pub const ALL_RANDOM: [FlowModel; 5] = [
        FlowModel::SmoothMode,
        FlowModel::OrientedShear,
        FlowModel::BoundedShearDrift,
        FlowModel::WhiteKraichnan,
        FlowModel::WhiteShear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlowModel::SmoothMode => "smooth_mode",
            FlowModel::OrientedShear => "oriented_shear",
            FlowModel::BoundedShearDrift => "bounded_shear_drift",
            FlowModel::WhiteKraichnan => "white_kraichnan",
            FlowModel::WhiteShear => "white_shear",
            FlowModel::Zero => "zero",
            FlowModel::Steady => "steady",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let m = match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "smooth_mode" => FlowModel::SmoothMode,
            "oriented_shear" => FlowModel::OrientedShear,
            "bounded_shear_drift" => FlowModel::BoundedShearDrift,
            "white_kraichnan" => FlowModel::WhiteKraichnan,
            "white_shear" => FlowModel::WhiteShear,
            "zero" => FlowModel::Zero,
            other => {
                return Err(Error::config(
                    "model",
                    format!(
                        "unknown model `{other}`; expected smooth_mode, oriented_shear, \
                         bounded_shear_drift, white_kraichnan, white_shear or zero"
                    ),
                ))
            }
        };
        Ok(m)
    }

    /// White models renew the drift every transport step (`eps = dt`).
    pub fn is_white(self) -> bool {
        matches!(self, FlowModel::WhiteKraichnan | FlowModel::WhiteShear)
    }

    /// Models built from one-dimensional shear profiles.
    pub fn is_shear(self) -> bool {
        matches!(
            self,
            FlowModel::OrientedShear | FlowModel::BoundedShearDrift | FlowModel::WhiteShear
        )
    }

    /// Default Hölder exponent: `0.75` where `alpha > 1/2` is required, else `0.5`.
    pub fn default_alpha(self) -> f64 {
        if self == FlowModel::BoundedShearDrift {
            0.75
        } else {
            0.5
        }
    }
}

impl std::fmt::Display for FlowModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Spatial parameters shared by the flow models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub alpha: f64,
    pub eta: f64,
    pub rho: CutoffProfile,
    pub kmax: usize,
    /// Grid resolution per axis of the sampled segments.
    pub n: usize,
}

impl FlowParams {
    pub fn new(alpha: f64, kmax: usize, n: usize) -> Self {
        Self {
            alpha,
            eta: 0.0,
            rho: CutoffProfile::Gaussian,
            kmax,
            n,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Two-dimensional Kraichnan spectrum with these parameters.
    pub fn spectrum(&self) -> Result<SpectrumConfig> {
        Ok(SpectrumConfig::new(2, self.alpha, self.eta, self.kmax)?.with_rho(self.rho))
    }

    pub fn shear(&self) -> Result<ShearSpectrum> {
        ShearSpectrum::new(self.alpha, self.kmax)
    }

    pub fn grid(&self) -> Grid {
        Grid::square(self.n)
    }

    fn validate_for(&self, model: FlowModel) -> Result<()> {
        let grid = Grid::new(self.n, 2)?;
        match model {
            FlowModel::Zero | FlowModel::Steady => return Ok(()),
            FlowModel::BoundedShearDrift if self.alpha <= 0.5 => {
                return Err(Error::config(
                    "alpha",
                    format!(
                        "bounded_shear_drift needs alpha > 1/2 so that the amplitude sum converges, got {}",
                        self.alpha
                    ),
                ))
            }
            _ => {}
        }
        if model.is_shear() {
            self.shear()?;
        } else {
            self.spectrum()?;
        }
        grid.check_resolves(self.kmax)
    }
}

/// Parity of a trigonometric mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Cos,
    Sin,
}

/// `f_j(x) = scale * trig(k . x) * dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableMode {
    pub k: [i64; 2],
    pub parity: Parity,
    /// Unit vector orthogonal to `k`, so every mode is divergence-free.
    pub dir: [f64; 2],
}

/// Bounded vector modes `f_j` and weights with `sum_j c_j^2 = 1` such that
/// `sum_j c_j^2 f_j(x) (x) f_j(y) = D(x - y)` for the two-dimensional
/// Kraichnan covariance `D`.
///
/// Each half-lattice wavevector `k` contributes a cosine and a sine mode with
/// weight proportional to `2 lambda_k`, where `D^(k) = lambda_k P_k`. The common
/// amplitude `scale = sqrt(sum 2 lambda_k)` undoes the normalization of the weights.
#[derive(Debug, Clone)]
pub struct ModeTable {
    modes: Vec<TableMode>,
    weights: Vec<f64>,
    scale: f64,
    sampler: WeightedIndex<f64>,
}

/// Default truncation of the mode table.
pub const MODE_TABLE_KMAX: usize = 32;

impl ModeTable {
    pub fn from_spectrum(cfg: &SpectrumConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.d != 2 {
            return Err(Error::Unsupported("mode tables are two-dimensional".into()));
        }
        let mut modes = Vec::new();
        let mut raw = Vec::new();
        for k in cfg.half_modes() {
            let kn = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            let lambda = cfg.radial(kn);
            if lambda == 0.0 {
                continue;
            }
            let dir = [-(k[1] as f64) / kn, k[0] as f64 / kn];
            for parity in [Parity::Cos, Parity::Sin] {
                modes.push(TableMode {
                    k: [k[0], k[1]],
                    parity,
                    dir,
                });
                raw.push(2.0 * lambda);
            }
        }
        let total: f64 = raw.iter().sum();
        if modes.is_empty() || !(total > 0.0) || !total.is_finite() {
            return Err(Error::Degenerate(
                "spectrum has no energy to tabulate".into(),
            ));
        }
        let weights: Vec<f64> = raw.iter().map(|w| (w / total).sqrt()).collect();
        let sampler = WeightedIndex::new(raw.iter().copied())
            .map_err(|e| Error::Degenerate(format!("mode weights: {e}")))?;
        Ok(Self {
            modes,
            weights,
            scale: total.sqrt(),
            sampler,
        })
    }

    /// The default table: `alpha = 0.5`, `eta = 0`, `kmax = 32`.
    pub fn default_table() -> Result<Self> {
        Self::from_spectrum(&SpectrumConfig::new(2, 0.5, 0.0, MODE_TABLE_KMAX)?)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[TableMode] {
        &self.modes
    }

    /// The weights `c_j`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sup_x |f_j(x)|`, the same for every mode.
    pub fn sup_norm(&self) -> f64 {
        self.scale
    }

    pub fn kmax(&self) -> usize {
        self.modes
            .iter()
            .map(|m| m.k[0].unsigned_abs().max(m.k[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// `f_j(x)`.
    pub fn eval(&self, j: usize, x: &[f64]) -> [f64; 2] {
        let m = &self.modes[j];
        let phase = m.k[0] as f64 * x[0] + m.k[1] as f64 * x[1];
        let t = match m.parity {
            Parity::Cos => phase.cos(),
            Parity::Sin => phase.sin(),
        };
        [self.scale * t * m.dir[0], self.scale * t * m.dir[1]]
    }

    /// `sum_j c_j^2 f_j(x) (x) f_j(y)`.
    pub fn covariance(&self, x: &[f64], y: &[f64]) -> SymMatrix {
        let mut out = [[0.0; 2]; 2];
        for (j, c) in self.weights.iter().enumerate() {
            let fx = self.eval(j, x);
            let fy = self.eval(j, y);
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += c * c * fx[a] * fy[b];
                }
            }
        }
        let mut m = SymMatrix::zeros(2);
        m.m[0][0] = out[0][0];
        m.m[0][1] = out[0][1];
        m.m[1][0] = out[1][0];
        m.m[1][1] = out[1][1];
        m
    }

    /// Mode `j` sampled on a grid, times `factor`.
    pub fn field(&self, j: usize, grid: Grid, factor: f64) -> Result<VectorField> {
        grid.check_resolves(self.kmax())?;
        let comp = |c: usize| GridField::from_fn(grid, |x| factor * self.eval(j, x)[c]);
        VectorField::new(vec![comp(0), comp(1)])
    }

    /// Draws `J` with `P(J = j) = c_j^2`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }
}

/// `Z f_J` on the grid, with `Z` standard normal and `P(J = j) = c_j^2`.
pub fn sample_smooth_mode_segment(table: &ModeTable, grid: Grid, seed: u64) -> Result<VectorField> {
    let mut rng = rng::seeded(seed);
    let j = table.draw(&mut rng);
    let z: f64 = rng.sample(StandardNormal);
    table.field(j, grid, z)
}

fn shear_field(
    grid: Grid,
    horizontal: &[f64],
    vertical: &[f64],
    drift: [f64; 2],
) -> Result<VectorField> {
    // horizontal(y) e_x + vertical(x) e_y; axis 0 is x, axis 1 is y
    let n = grid.n;
    let mut ux = GridField::zeros(grid);
    let mut uy = GridField::zeros(grid);
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            ux.values_mut()[idx] = horizontal[j] + drift[0];
            uy.values_mut()[idx] = vertical[i] + drift[1];
        }
    }
    VectorField::new(vec![ux, uy])
}

fn require_square(grid: Grid) -> Result<()> {
    if grid.d != 2 {
        return Err(Error::Unsupported(format!(
            "shear flows are two-dimensional, got d = {}",
            grid.d
        )));
    }
    Ok(())
}

/// `sqrt(2) B f(x) e_y + sqrt(2) (1 - B) f(y) e_x` with `B` a fair coin and `f`
/// a Gaussian profile with covariance `D_f`.
pub fn sample_oriented_shear_segment(
    shear: &ShearSpectrum,
    grid: Grid,
    seed: u64,
) -> Result<VectorField> {
    require_square(grid)?;
    let mut rng = rng::seeded(seed);
    let vertical: bool = rng.random();
    let mut f = sample_shear_profile(shear, grid.n, ProfileCoefficients::Gaussian, &mut rng)?;
    for v in f.iter_mut() {
        *v *= std::f64::consts::SQRT_2;
    }
    let zero = vec![0.0; grid.n];
    if vertical {
        shear_field(grid, &zero, &f, [0.0; 2])
    } else {
        shear_field(grid, &f, &zero, [0.0; 2])
    }
}

/// `g(x) e_y + h(y) e_x + 2 K X (e_x + e_y)` with `+-1` profile coefficients and
/// a fair sign `X`, where `K` bounds `|g|` and `|h|`. Both components stay in
/// `[K, 3K]` in absolute value and never change sign within a segment.
pub fn sample_bounded_shear_drift_segment(
    shear: &ShearSpectrum,
    grid: Grid,
    seed: u64,
) -> Result<VectorField> {
    require_square(grid)?;
    if shear.alpha <= 0.5 {
        return Err(Error::config(
            "alpha",
            format!("bounded shears need alpha > 1/2, got {}", shear.alpha),
        ));
    }
    let mut rng = rng::seeded(seed);
    let g = sample_shear_profile(shear, grid.n, ProfileCoefficients::Rademacher, &mut rng)?;
    let h = sample_shear_profile(shear, grid.n, ProfileCoefficients::Rademacher, &mut rng)?;
    let x = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let drift = 2.0 * shear.amplitude_sum() * x;
    shear_field(grid, &h, &g, [drift, drift])
}

/// `f(x) e_y + g(y) e_x` with independent Gaussian profiles.
pub fn sample_white_shear_segment(
    shear: &ShearSpectrum,
    grid: Grid,
    seed: u64,
) -> Result<VectorField> {
    require_square(grid)?;
    let mut rng = rng::seeded(seed);
    let f = sample_shear_profile(shear, grid.n, ProfileCoefficients::Gaussian, &mut rng)?;
    let g = sample_shear_profile(shear, grid.n, ProfileCoefficients::Gaussian, &mut rng)?;
    shear_field(grid, &g, &f, [0.0; 2])
}

/// Spatial covariance `E[u(x) (x) u(y)]` of one unscaled segment, from the model
/// definitions (not from samples).
pub fn model_covariance(
    model: FlowModel,
    params: &FlowParams,
    x: &[f64],
    y: &[f64],
) -> Result<SymMatrix> {
    let mut out = SymMatrix::zeros(2);
    match model {
        FlowModel::SmoothMode | FlowModel::WhiteKraichnan => {
            let diff = [x[0] - y[0], x[1] - y[1]];
            return crate::spectrum::eval_real_covariance(&params.spectrum()?, &diff);
        }
        FlowModel::OrientedShear | FlowModel::WhiteShear | FlowModel::BoundedShearDrift => {
            let shear = params.shear()?;
            out.set(0, 0, shear.profile_covariance(x[1] - y[1]));
            out.set(1, 1, shear.profile_covariance(x[0] - y[0]));
            if model == FlowModel::BoundedShearDrift {
                let k = shear.amplitude_sum();
                let drift = SymMatrix::outer(&[2.0 * k, 2.0 * k]);
                out = out.add(&drift);
            }
        }
        FlowModel::Zero | FlowModel::Steady => {}
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Sampler {
    Table(Arc<ModeTable>),
    Spectrum(SpectrumConfig),
    Shear(ShearSpectrum),
    Fixed(Arc<VectorField>),
    None,
}

/// `u^eps(t) = eps^-1/2 u_j` for `t` in `[(j-1) eps, j eps)`, `j = 1, 2, ...`.
#[derive(Debug, Clone)]
pub struct PiecewiseFlow {
    model: FlowModel,
    params: FlowParams,
    eps: f64,
    horizon: f64,
    seed: u64,
    sampler: Sampler,
}

/// Relative slack when deciding whether `t` sits exactly on a segment boundary.
const BOUNDARY_TOL: f64 = 1e-9;

impl PiecewiseFlow {
    /// Steady field `field` on `[0, horizon]`, cut into segments of length `eps`.
    pub fn steady(field: VectorField, eps: f64, horizon: f64) -> Result<Self> {
        check_times(eps, horizon)?;
        let n = field.grid().n;
        Ok(Self {
            model: FlowModel::Steady,
            params: FlowParams::new(0.5, 1, n),
            eps,
            horizon,
            seed: 0,
            sampler: Sampler::Fixed(Arc::new(field)),
        })
    }

    pub fn model(&self) -> FlowModel {
        self.model
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> Grid {
        match &self.sampler {
            Sampler::Fixed(f) => f.grid(),
            _ => self.params.grid(),
        }
    }

    /// Largest wavenumber present in any segment.
    pub fn kmax(&self) -> usize {
        match &self.sampler {
            Sampler::Table(t) => t.kmax(),
            Sampler::Spectrum(c) => c.kmax,
            Sampler::Shear(s) => s.kmax,
            Sampler::Fixed(_) | Sampler::None => 0,
        }
    }

    /// `ceil(T / eps)`.
    pub fn segment_count(&self) -> usize {
        ((self.horizon / self.eps) * (1.0 - BOUNDARY_TOL))
            .ceil()
            .max(1.0) as usize
    }

    /// One-based index of the segment governing time `t`: `floor(t / eps) + 1`,
    /// so `t = j eps` already belongs to segment `j + 1`.
    pub fn segment_index(&self, t: f64) -> usize {
        let r = t / self.eps;
        let nearest = r.round();
        let q = if (r - nearest).abs() <= BOUNDARY_TOL * nearest.max(1.0) {
            nearest
        } else {
            r.floor()
        };
        q.max(0.0) as usize + 1
    }

    /// Unscaled segment `j` (one-based).
    pub fn raw_segment(&self, j: usize) -> Result<VectorField> {
        if j == 0 {
            return Err(Error::config("segment", "segments are numbered from 1"));
        }
        let grid = self.grid();
        let seed = rng::derive(self.seed, j as u64);
        match &self.sampler {
            Sampler::Table(t) => sample_smooth_mode_segment(t, grid, seed),
            Sampler::Spectrum(cfg) => sample_velocity(cfg, grid.n, &mut rng::seeded(seed)),
            Sampler::Shear(s) => match self.model {
                FlowModel::OrientedShear => sample_oriented_shear_segment(s, grid, seed),
                FlowModel::BoundedShearDrift => sample_bounded_shear_drift_segment(s, grid, seed),
                _ => sample_white_shear_segment(s, grid, seed),
            },
            Sampler::Fixed(f) => Ok((**f).clone()),
            Sampler::None => Ok(VectorField::zeros(grid)),
        }
    }

    /// Segment `j` including the `eps^-1/2` factor (none for steady and zero flows).
    pub fn segment(&self, j: usize) -> Result<VectorField> {
        let raw = self.raw_segment(j)?;
        Ok(match self.sampler {
            Sampler::Fixed(_) | Sampler::None => raw,
            _ => raw.scaled(self.amplitude()),
        })
    }

    /// `eps^-1/2`, or 1 for deterministic flows.
    pub fn amplitude(&self) -> f64 {
        match self.sampler {
            Sampler::Fixed(_) | Sampler::None => 1.0,
            _ => self.eps.powf(-0.5),
        }
    }

    /// Velocity in force at time `t`.
    pub fn velocity_at(&self, t: f64) -> Result<VectorField> {
        self.segment(self.segment_index(t))
    }

    /// All segments, for short horizons.
    pub fn materialize(&self) -> Result<Vec<VectorField>> {
        (1..=self.segment_count())
            .map(|j| self.segment(j))
            .collect()
    }

    /// Same flow with a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        check_times(self.eps, horizon)?;
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }
}

fn check_times(eps: f64, horizon: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::config("eps", format!("must be > 0, got {eps}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::config("tmax", format!("must be > 0, got {horizon}")));
    }
    Ok(())
}

/// Builds the flow for a model. For white models `eps` must be the transport
/// time step.
pub fn build_piecewise_flow(
    model: FlowModel,
    params: &FlowParams,
    eps: f64,
    horizon: f64,
    seed: u64,
) -> Result<PiecewiseFlow> {
    check_times(eps, horizon)?;
    params.validate_for(model)?;
    let sampler = match model {
        FlowModel::SmoothMode => {
            let table = ModeTable::from_spectrum(&params.spectrum()?)?;
            Sampler::Table(Arc::new(table))
        }
        FlowModel::WhiteKraichnan => Sampler::Spectrum(params.spectrum()?),
        FlowModel::OrientedShear | FlowModel::BoundedShearDrift | FlowModel::WhiteShear => {
            Sampler::Shear(params.shear()?)
        }
        FlowModel::Zero => Sampler::None,
        FlowModel::Steady => {
            return Err(Error::config(
                "model",
                "steady flows are built with PiecewiseFlow::steady",
            ))
        }
    };
    Ok(PiecewiseFlow {
        model,
        params: *params,
        eps,
        horizon,
        seed,
        sampler,
    })
}

/// A single smooth shear `amplitude * sin(y) e_x`.
pub fn sine_shear(grid: Grid, amplitude: f64) -> Result<VectorField> {
    VectorField::new(vec![
        GridField::from_fn(grid, |x| amplitude * x[1].sin()),
        GridField::zeros(grid),
    ])
}

/// Grid index nearest to the physical point `x`.
pub fn nearest_index(grid: Grid, x: &[f64]) -> usize {
    let h = grid.spacing();
    let mut multi = [0usize; 3];
    for (axis, m) in multi.iter_mut().enumerate().take(grid.d) {
        let j = (x[axis] / h).round() as i64;
        *m = j.rem_euclid(grid.n as i64) as usize;
    }
    grid.flatten(&multi[..grid.d])
}
