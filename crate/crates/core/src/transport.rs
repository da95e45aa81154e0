//! Advection-diffusion `d_t theta + div(u theta) = kappa lap theta` for one flow
//! realization, ensembles over realizations, and dissipation diagnostics.
//!
//! The scalar lives in Fourier space, truncated to `|k_i| <= N = (n - 1) / 3`
//! so that products with a velocity of the same bandwidth are alias-free.
//! Each step is Strang split: exact half-step diffusion, a full advection step
//! with the frozen segment velocity (RK4, sub-stepped to a CFL number of at
//! most one half), then another half-step of diffusion. The zero mode is never
//! touched, so the mean is conserved exactly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{wavevectors, FftNd};
use crate::flows::{build_piecewise_flow, FlowModel, FlowParams, PiecewiseFlow};
use crate::grid::{Grid, GridField, VectorField};
use crate::rng;

/// Largest CFL number used by the advection sub-steps.
pub const CFL: f64 = 0.5;

/// Sub-steps allowed within one transport step before giving up.
pub const MAX_SUBSTEPS: usize = 100_000;

/// Largest retained wavenumber per axis under the 2/3 rule.
pub fn dealias_cutoff(n: usize) -> usize {
    (n - 1) / 3
}

/// Pseudo-spectral solver state for one grid.
pub struct SpectralTransport {
    grid: Grid,
    fft: FftNd,
    kx: Vec<f64>,
    ky: Vec<f64>,
    k2: Vec<f64>,
    mask: Vec<bool>,
    neg: Vec<usize>,
    phys: Vec<Complex64>,
    prod: Vec<Complex64>,
}

impl SpectralTransport {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.d != 2 {
            return Err(Error::Unsupported(format!(
                "the transport solver is two-dimensional, got d = {}",
                grid.d
            )));
        }
        let cut = dealias_cutoff(grid.n) as i64;
        let ks = wavevectors(grid);
        let neg = ks
            .iter()
            .map(|k| {
                grid.flatten(&[
                    (-k[0]).rem_euclid(grid.n as i64) as usize,
                    (-k[1]).rem_euclid(grid.n as i64) as usize,
                ])
            })
            .collect();
        Ok(Self {
            grid,
            fft: FftNd::new(grid),
            kx: ks.iter().map(|k| k[0] as f64).collect(),
            ky: ks.iter().map(|k| k[1] as f64).collect(),
            k2: ks
                .iter()
                .map(|k| (k[0] * k[0] + k[1] * k[1]) as f64)
                .collect(),
            mask: ks
                .iter()
                .map(|k| k[0].abs() <= cut && k[1].abs() <= cut)
                .collect(),
            neg,
            phys: vec![Complex64::default(); grid.len()],
            prod: vec![Complex64::default(); grid.len()],
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Truncated spectrum of a physical field.
    pub fn to_spectral(&mut self, f: &GridField) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (b, &keep) in buf.iter_mut().zip(&self.mask) {
            if !keep {
                *b = Complex64::default();
            }
        }
        buf
    }

    pub fn to_physical(&mut self, spec: &[Complex64]) -> GridField {
        let len = self.grid.len() as f64;
        self.phys.copy_from_slice(spec);
        self.fft.inverse(&mut self.phys);
        let values = self.phys.iter().map(|c| c.re / len).collect();
        GridField::from_values(self.grid, values).expect("same grid")
    }

    /// `h^2 sum theta^2`, computed from the spectrum.
    pub fn energy(&self, spec: &[Complex64]) -> f64 {
        let len = self.grid.len() as f64;
        self.grid.cell_volume() * spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / len
    }

    /// Exact diffusion over `tau`.
    pub fn diffuse(&self, spec: &mut [Complex64], kappa: f64, tau: f64) {
        if kappa == 0.0 {
            return;
        }
        for (c, k2) in spec.iter_mut().zip(&self.k2) {
            *c *= (-kappa * k2 * tau).exp();
        }
    }

    /// `-div(u theta)` in Fourier space, truncated.
    fn rhs(&mut self, spec: &[Complex64], u: &VectorField, out: &mut [Complex64]) {
        let len = self.grid.len() as f64;
        self.phys.copy_from_slice(spec);
        self.fft.inverse(&mut self.phys);
        let (ux, uy) = (u.components[0].values(), u.components[1].values());
        // both real fluxes packed into one complex transform
        for i in 0..self.prod.len() {
            let th = self.phys[i].re / len;
            self.prod[i] = Complex64::new(ux[i] * th, uy[i] * th);
        }
        self.fft.forward(&mut self.prod);
        for i in 0..out.len() {
            if !self.mask[i] {
                out[i] = Complex64::default();
                continue;
            }
            let z = self.prod[i];
            let zc = self.prod[self.neg[i]].conj();
            let fx = (z + zc) * 0.5;
            let fy = (z - zc) * Complex64::new(0.0, -0.5);
            // -i k . F
            out[i] = Complex64::new(0.0, -1.0) * (fx * self.kx[i] + fy * self.ky[i]);
        }
    }

    /// Advection by a frozen velocity over `tau` with `substeps` RK4 steps.
    pub fn advect(&mut self, spec: &mut [Complex64], u: &VectorField, tau: f64, substeps: usize) {
        let len = spec.len();
        let mut k1 = vec![Complex64::default(); len];
        let mut k2 = vec![Complex64::default(); len];
        let mut k3 = vec![Complex64::default(); len];
        let mut k4 = vec![Complex64::default(); len];
        let mut tmp = vec![Complex64::default(); len];
        let s = tau / substeps as f64;
        for _ in 0..substeps {
            self.rhs(spec, u, &mut k1);
            for i in 0..len {
                tmp[i] = spec[i] + k1[i] * (0.5 * s);
            }
            self.rhs(&tmp, u, &mut k2);
            for i in 0..len {
                tmp[i] = spec[i] + k2[i] * (0.5 * s);
            }
            self.rhs(&tmp, u, &mut k3);
            for i in 0..len {
                tmp[i] = spec[i] + k3[i] * s;
            }
            self.rhs(&tmp, u, &mut k4);
            for i in 0..len {
                spec[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (s / 6.0);
            }
        }
    }

    /// RK4 sub-steps needed to keep `max(|u_x| + |u_y|) tau_sub / h <= CFL`.
    pub fn substeps_for(&self, u: &VectorField, tau: f64) -> Result<usize> {
        let courant = u.max_l1_speed() * tau / self.grid.spacing();
        let needed = (courant / CFL).ceil().max(1.0);
        if !needed.is_finite() || needed > MAX_SUBSTEPS as f64 {
            return Err(Error::CflCapExceeded {
                needed: if needed.is_finite() {
                    needed as usize
                } else {
                    usize::MAX
                },
                cap: MAX_SUBSTEPS,
            });
        }
        Ok(needed as usize)
    }
}

#[derive(Debug, Clone)]
pub struct TransportSnapshot {
    pub t: f64,
    pub theta: GridField,
}

#[derive(Debug, Clone)]
pub struct TransportRun {
    pub kappa: f64,
    pub dt: f64,
    /// `(t, ||theta(t)||_2^2)` at every step, starting at `t = 0`.
    pub energy_trace: Vec<(f64, f64)>,
    pub snapshots: Vec<TransportSnapshot>,
    pub initial_energy: f64,
    /// `||theta0||^2 - ||theta(T)||^2`.
    pub dissipated: f64,
    pub final_theta: GridField,
    /// Largest `|mean(theta(t)) - mean(theta0)|`.
    pub mean_drift: f64,
    /// Largest relative per-step energy increase (negative when strictly decreasing).
    pub max_relative_increase: f64,
    pub total_substeps: usize,
}

impl TransportRun {
    pub fn final_energy(&self) -> f64 {
        self.energy_trace
            .last()
            .map_or(self.initial_energy, |p| p.1)
    }

    pub fn energy_at(&self, t: f64) -> Option<f64> {
        crate::correlation::interpolate(&self.energy_trace, t)
    }
}

/// Number of steps of size `dt` covering `[0, t_end]`, with `dt` required to
/// divide `t_end` up to round-off.
fn step_count(t_end: f64, dt: f64, field: &'static str) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::config("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::config(field, format!("must be > 0, got {t_end}")));
    }
    let r = t_end / dt;
    let m = r.round();
    if m < 1.0 || (r - m).abs() > 1e-6 * m.max(1.0) {
        return Err(Error::config(
            "dt",
            format!("dt = {dt} must divide {field} = {t_end}"),
        ));
    }
    Ok(m as usize)
}

/// Transports `theta0` by `flow` up to time `t_end` with step `dt`.
pub fn advect_diffuse(
    theta0: &GridField,
    flow: &PiecewiseFlow,
    kappa: f64,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<TransportRun> {
    let mut solver = SpectralTransport::new(theta0.grid())?;
    advect_diffuse_with(&mut solver, theta0, flow, kappa, t_end, dt, snapshot_times)
}

/// [`advect_diffuse`] reusing a solver, which saves FFT planning in ensembles.
pub fn advect_diffuse_with(
    solver: &mut SpectralTransport,
    theta0: &GridField,
    flow: &PiecewiseFlow,
    kappa: f64,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<TransportRun> {
    let grid = theta0.grid();
    if solver.grid() != grid {
        return Err(Error::GridMismatch("solver and scalar grids differ".into()));
    }
    if flow.grid() != grid {
        return Err(Error::GridMismatch(format!(
            "flow sampled on n = {}, scalar on n = {}",
            flow.grid().n,
            grid.n
        )));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::config("kappa", format!("must be >= 0, got {kappa}")));
    }
    let cut = dealias_cutoff(grid.n);
    if flow.kmax() > cut {
        return Err(Error::Aliasing {
            n: grid.n,
            kmax: flow.kmax(),
            required: 3 * flow.kmax() + 1,
        });
    }
    step_count(flow.eps(), dt, "eps")?;
    let steps = step_count(t_end, dt, "tmax")?;
    if t_end > flow.horizon() * (1.0 + 1e-9) {
        return Err(Error::config(
            "tmax",
            format!("flow only covers [0, {}]", flow.horizon()),
        ));
    }

    let mut spec = solver.to_spectral(theta0);
    let mean0 = theta0.mean();
    let initial_energy = solver.energy(&spec);
    let mut energy_trace = Vec::with_capacity(steps + 1);
    energy_trace.push((0.0, initial_energy));
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = snapshot_times.to_vec();
    pending.sort_by(|a, b| a.total_cmp(b));
    let mut pending = pending.into_iter().peekable();
    let mut take_snapshots = |t: f64,
                              spec: &[Complex64],
                              solver: &mut SpectralTransport,
                              out: &mut Vec<TransportSnapshot>| {
        while let Some(&ts) = pending.peek() {
            if ts > t + 0.5 * dt {
                break;
            }
            out.push(TransportSnapshot {
                t,
                theta: solver.to_physical(spec),
            });
            pending.next();
        }
    };
    take_snapshots(0.0, &spec, solver, &mut snapshots);

    let mut current: Option<(usize, VectorField, usize)> = None;
    let mut max_rel = f64::NEG_INFINITY;
    let mut mean_drift = 0.0f64;
    let mut total_substeps = 0;
    let mut prev = initial_energy;
    for s in 0..steps {
        let t_mid = (s as f64 + 0.5) * dt;
        let j = flow.segment_index(t_mid);
        if current.as_ref().map(|c| c.0) != Some(j) {
            let u = flow.segment(j)?;
            let m = solver.substeps_for(&u, dt)?;
            current = Some((j, u, m));
        }
        let (_, u, m) = current.as_ref().expect("segment loaded");
        solver.diffuse(&mut spec, kappa, 0.5 * dt);
        solver.advect(&mut spec, u, dt, *m);
        solver.diffuse(&mut spec, kappa, 0.5 * dt);
        total_substeps += m;
        let t = (s + 1) as f64 * dt;
        let e = solver.energy(&spec);
        if prev > 0.0 {
            max_rel = max_rel.max((e - prev) / prev);
        }
        prev = e;
        mean_drift = mean_drift.max((spec[0].re / grid.len() as f64 - mean0).abs());
        energy_trace.push((t, e));
        take_snapshots(t, &spec, solver, &mut snapshots);
    }
    let final_theta = solver.to_physical(&spec);
    mean_drift = mean_drift.max((final_theta.mean() - mean0).abs());
    Ok(TransportRun {
        kappa,
        dt,
        dissipated: initial_energy - prev,
        energy_trace,
        snapshots,
        initial_energy,
        final_theta,
        mean_drift,
        max_relative_increase: max_rel,
        total_substeps,
    })
}

/// Everything that defines an ensemble apart from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub model: FlowModel,
    pub params: FlowParams,
    /// Correlation time; ignored for white models, which use `dt`.
    pub eps: f64,
    pub kappa: f64,
    pub t_end: f64,
    pub dt: f64,
    pub realizations: usize,
}

impl McSpec {
    pub fn effective_eps(&self) -> f64 {
        if self.model.is_white() {
            self.dt
        } else {
            self.eps
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn flow(&self, seed: u64) -> Result<PiecewiseFlow> {
        build_piecewise_flow(
            self.model,
            &self.params,
            self.effective_eps(),
            self.t_end,
            seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_energy: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
    pub initial_energy: f64,
    /// Final energy of every realization, in seed order.
    pub final_energies: Vec<f64>,
    /// Largest mean drift seen in any realization.
    pub max_mean_drift: f64,
    /// Largest relative per-step energy increase seen in any realization.
    pub max_relative_increase: f64,
}

impl EnsembleStats {
    /// `(mean, stderr)` at time `t`, interpolated.
    pub fn at(&self, t: f64) -> Option<(f64, f64)> {
        let m: Vec<(f64, f64)> = self
            .times
            .iter()
            .copied()
            .zip(self.mean_energy.iter().copied())
            .collect();
        let s: Vec<(f64, f64)> = self
            .times
            .iter()
            .copied()
            .zip(self.stderr.iter().copied())
            .collect();
        Some((
            crate::correlation::interpolate(&m, t)?,
            crate::correlation::interpolate(&s, t)?,
        ))
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean_energy.last().unwrap_or(&self.initial_energy)
    }

    pub fn final_stderr(&self) -> f64 {
        *self.stderr.last().unwrap_or(&0.0)
    }
}

/// Seeds of the realizations of an ensemble started from `seed`.
pub fn realization_seeds(seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|r| rng::derive(seed, r)).collect()
}

/// Ensemble of transport runs, realization `r` driven by `derive(seed, r)`.
pub fn mc_energy(spec: &McSpec, theta0: &GridField, seed: u64) -> Result<EnsembleStats> {
    mc_energy_with_seeds(spec, theta0, &realization_seeds(seed, spec.realizations))
}

/// Ensemble over explicit flow seeds, which must be pairwise distinct.
pub fn mc_energy_with_seeds(
    spec: &McSpec,
    theta0: &GridField,
    seeds: &[u64],
) -> Result<EnsembleStats> {
    if seeds.len() < 2 {
        return Err(Error::config(
            "realizations",
            format!("need at least 2, got {}", seeds.len()),
        ));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::config("seed", "realization seeds must be distinct"));
    }
    let runs: Vec<Result<TransportRun>> = seeds
        .par_iter()
        .map_init(
            || SpectralTransport::new(theta0.grid()),
            |solver, &s| {
                let solver = solver
                    .as_mut()
                    .map_err(|e| Error::Unsupported(e.to_string()))?;
                let flow = spec.flow(s)?;
                advect_diffuse_with(solver, theta0, &flow, spec.kappa, spec.t_end, spec.dt, &[])
            },
        )
        .collect();
    let runs: Vec<TransportRun> = runs.into_iter().collect::<Result<_>>()?;
    Ok(reduce(&runs))
}

fn reduce(runs: &[TransportRun]) -> EnsembleStats {
    let n = runs.len();
    let len = runs[0].energy_trace.len();
    let times: Vec<f64> = runs[0].energy_trace.iter().map(|p| p.0).collect();
    let mut mean_energy = vec![0.0; len];
    let mut stderr = vec![0.0; len];
    for i in 0..len {
        let vals = runs.iter().map(|r| r.energy_trace[i].1);
        let m = vals.clone().sum::<f64>() / n as f64;
        let var = vals.map(|v| (v - m) * (v - m)).sum::<f64>() / (n as f64 - 1.0);
        mean_energy[i] = m;
        stderr[i] = (var / n as f64).sqrt();
    }
    EnsembleStats {
        times,
        mean_energy,
        stderr,
        n_realizations: n,
        initial_energy: runs[0].initial_energy,
        final_energies: runs.iter().map(TransportRun::final_energy).collect(),
        max_mean_drift: runs.iter().map(|r| r.mean_drift).fold(0.0, f64::max),
        max_relative_increase: runs
            .iter()
            .map(|r| r.max_relative_increase)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    /// Mean of `||theta0||^2 - ||theta(T)||^2`.
    pub dissipated: f64,
    pub stderr: f64,
    /// `dissipated / ||theta0||^2`.
    pub relative: f64,
    pub max_mean_drift: f64,
    pub max_relative_increase: f64,
}

/// Mean dissipated energy for each `kappa`, all with the same flow seeds.
pub fn dissipation_sweep(
    spec: &McSpec,
    kappas: &[f64],
    theta0: &GridField,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if kappas.is_empty() {
        return Err(Error::config("kappa_list", "must not be empty"));
    }
    if kappas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("kappa_list", "must be strictly decreasing"));
    }
    kappas
        .iter()
        .map(|&kappa| {
            let stats = mc_energy(&spec.with_kappa(kappa), theta0, seed)?;
            let e0 = stats.initial_energy;
            // the variance of the dissipation is that of the final energy
            Ok(SweepRow {
                kappa,
                dissipated: e0 - stats.final_mean(),
                stderr: stats.final_stderr(),
                relative: (e0 - stats.final_mean()) / e0,
                max_mean_drift: stats.max_mean_drift,
                max_relative_increase: stats.max_relative_increase,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapVerdict {
    GapDetected,
    GapVanishing,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub initial_energy: f64,
    /// Vanishing-diffusivity limit of the final energy.
    pub extrapolated_energy: f64,
    /// `||theta0||^2 - extrapolated_energy`.
    pub gap: f64,
    pub uncertainty: f64,
    /// Ratio of successive energy increments used by the extrapolation.
    pub ratio: Option<f64>,
    pub verdict: GapVerdict,
    pub note: String,
}

/// Relative gap separating the two verdicts.
pub const GAP_THRESHOLD: f64 = 0.1;

/// Extrapolates the final energy of a sweep to `kappa -> 0`.
///
/// The last three entries are taken to be decades apart. Their energy
/// increments `d1`, `d2` define `q = d2 / d1`; for `0 <= q < 1` the remaining
/// increments are summed as a geometric tail, for `q >= 1` the tail does not
/// close and the limit is capped at `||theta0||^2`. Increments within two
/// standard errors of zero count as zero; a significant decrease of the
/// energy as `kappa` decreases makes the report inconclusive.
pub fn energy_gap_witness(rows: &[SweepRow], initial_energy: f64) -> Result<GapReport> {
    if rows.len() < 3 {
        return Err(Error::config(
            "kappa_list",
            "need at least three diffusivities",
        ));
    }
    let pos: Vec<f64> = rows.iter().map(|r| r.kappa).filter(|&k| k > 0.0).collect();
    if pos.len() < 3 || pos[0] / pos[pos.len() - 1] < 99.9 {
        return Err(Error::config(
            "kappa_list",
            "need positive diffusivities spanning at least two decades",
        ));
    }
    let tail: Vec<&SweepRow> = rows.iter().filter(|r| r.kappa > 0.0).collect();
    let tail = &tail[tail.len() - 3..];
    let e: Vec<f64> = tail.iter().map(|r| initial_energy - r.dissipated).collect();
    let se: Vec<f64> = tail.iter().map(|r| r.stderr).collect();
    let mut incr = [e[1] - e[0], e[2] - e[1]];
    let noise = [2.0 * (se[0] + se[1]), 2.0 * (se[1] + se[2])];
    for i in 0..2 {
        if incr[i] < -noise[i] {
            return Ok(GapReport {
                initial_energy,
                extrapolated_energy: e[2],
                gap: initial_energy - e[2],
                uncertainty: se[2],
                ratio: None,
                verdict: GapVerdict::Inconclusive,
                note: format!(
                    "final energy decreases as kappa decreases (step {i}: {:.3e})",
                    incr[i]
                ),
            });
        }
        if incr[i].abs() <= noise[i] {
            incr[i] = 0.0;
        }
    }
    let (extrapolated, ratio, mut unc) = if incr[1] == 0.0 {
        (e[2], Some(0.0), 2.0 * se[2])
    } else if incr[0] > 0.0 && incr[1] < incr[0] {
        let q = incr[1] / incr[0];
        let tail_sum = incr[1] * q / (1.0 - q);
        (e[2] + tail_sum, Some(q), 2.0 * se[2] + tail_sum.abs())
    } else {
        (
            initial_energy,
            incr[0].ne(&0.0).then(|| incr[1] / incr[0]),
            2.0 * se[2],
        )
    };
    let extrapolated = extrapolated.min(initial_energy);
    unc = unc.max(f64::EPSILON * initial_energy);
    let gap = initial_energy - extrapolated;
    let thr = GAP_THRESHOLD * initial_energy;
    let verdict = if gap - unc > thr {
        GapVerdict::GapDetected
    } else if gap + unc < thr || gap <= thr && incr[1] > 0.0 {
        GapVerdict::GapVanishing
    } else {
        GapVerdict::Inconclusive
    };
    Ok(GapReport {
        initial_energy,
        extrapolated_energy: extrapolated,
        gap,
        uncertainty: unc,
        ratio,
        verdict,
        note: String::new(),
    })
}

/// Runs the sweep and the witness in one go.
pub fn gap_witness_for(
    spec: &McSpec,
    kappas: &[f64],
    theta0: &GridField,
    seed: u64,
) -> Result<(Vec<SweepRow>, GapReport)> {
    let rows = dissipation_sweep(spec, kappas, theta0, seed)?;
    let e0 = theta0.l2_norm_sq();
    let report = energy_gap_witness(&rows, e0)?;
    Ok((rows, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::sine_shear;

    #[test]
    fn pure_heat_decay() {
        let grid = Grid::square(32);
        let theta0 = GridField::from_fn(grid, |x| x[0].cos());
        let kappa = 0.1;
        let flow = build_piecewise_flow(FlowModel::Zero, &FlowParams::new(0.5, 1, 32), 0.1, 1.0, 0)
            .unwrap();
        let run = advect_diffuse(&theta0, &flow, kappa, 1.0, 0.01, &[]).unwrap();
        let want = (-kappa * 1.0f64).exp() * theta0.l2_norm();
        assert!((run.final_energy().sqrt() - want).abs() / want < 1e-6);
    }

    #[test]
    fn shear_characteristics() {
        let grid = Grid::square(64);
        let theta0 = GridField::from_fn(grid, |x| x[0].cos());
        let flow = PiecewiseFlow::steady(sine_shear(grid, 1.0).unwrap(), 0.5, 1.0).unwrap();
        let run = advect_diffuse(&theta0, &flow, 0.0, 1.0, 0.01, &[1.0]).unwrap();
        let exact = GridField::from_fn(grid, |x| (x[0] - x[1].sin()).cos());
        assert!(run.snapshots[0].theta.max_abs_diff(&exact) < 1e-3);
        assert!(run.mean_drift < 1e-14);
    }

    #[test]
    fn rejects_misaligned_steps_and_aliasing() {
        let p = FlowParams::new(0.5, 12, 32);
        let grid = Grid::square(32);
        let theta0 = GridField::from_fn(grid, |x| x[0].cos());
        let flow = build_piecewise_flow(FlowModel::OrientedShear, &p, 0.1, 1.0, 0).unwrap();
        let e = advect_diffuse(&theta0, &flow, 0.0, 1.0, 0.01, &[]).unwrap_err();
        assert!(matches!(e, Error::Aliasing { .. }));
        let p = FlowParams::new(0.5, 8, 32);
        let flow = build_piecewise_flow(FlowModel::OrientedShear, &p, 0.1, 1.0, 0).unwrap();
        let e = advect_diffuse(&theta0, &flow, 0.0, 1.0, 0.03, &[]).unwrap_err();
        assert!(e.is_config());
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let grid = Grid::square(16);
        let theta0 = GridField::from_fn(grid, |x| x[0].cos());
        let spec = McSpec {
            model: FlowModel::OrientedShear,
            params: FlowParams::new(0.5, 4, 16),
            eps: 0.1,
            kappa: 1e-2,
            t_end: 0.2,
            dt: 0.05,
            realizations: 2,
        };
        assert!(mc_energy_with_seeds(&spec, &theta0, &[3, 3])
            .unwrap_err()
            .is_config());
        let s = mc_energy(&spec, &theta0, 1).unwrap();
        assert!(s.stderr[1..].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn witness_extrapolates_geometric_tails() {
        let row = |kappa: f64, dissipated: f64| SweepRow {
            kappa,
            dissipated,
            stderr: 0.0,
            relative: dissipated,
            max_mean_drift: 0.0,
            max_relative_increase: 0.0,
        };
        let vanishing = [row(1e-2, 0.4), row(1e-3, 0.2), row(1e-4, 0.1)];
        let r = energy_gap_witness(&vanishing, 1.0).unwrap();
        assert_eq!(r.verdict, GapVerdict::GapVanishing);
        assert!((r.extrapolated_energy - 1.0).abs() < 1e-12);
        let flat = [row(1e-2, 0.9), row(1e-3, 0.9), row(1e-4, 0.9)];
        let r = energy_gap_witness(&flat, 1.0).unwrap();
        assert_eq!(r.verdict, GapVerdict::GapDetected);
        assert!((r.gap - 0.9).abs() < 1e-12);
        let wrong = [row(1e-2, 0.1), row(1e-3, 0.5), row(1e-4, 0.6)];
        assert_eq!(
            energy_gap_witness(&wrong, 1.0).unwrap().verdict,
            GapVerdict::Inconclusive
        );
        assert!(energy_gap_witness(&vanishing[..2], 1.0).is_err());
    }
}
