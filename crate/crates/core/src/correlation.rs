//! The closed equation `d_t g = div(a(x) grad g)` for the two-point
//! correlation function, discretized on the periodic grid and stepped with
//! implicit Euler.
//!
//! # Discretization
//!
//! Each pointwise tensor `a(x)` is split with Selling's decomposition into a
//! nonnegative combination `a = sum_k rho_k e_k e_k^T` of three integer stencil
//! offsets `e_k`. The discrete energy
//!
//! ```text
//! E(g) = h^d sum_x sum_k rho_k(x) [ (g(x+e_k) - g(x))^2 + (g(x-e_k) - g(x))^2 ] / (2 h^2)
//! ```
//!
//! is consistent with `int grad g . a grad g`, and the operator is `L = -1/2 grad E`.
//! By construction `L` is symmetric, negative semidefinite, annihilates
//! constants, and has nonnegative off-diagonal entries. Implicit Euler with
//! it is therefore mean preserving, L2 contractive and satisfies the discrete
//! maximum principle, with no special treatment of the degenerate point
//! `x = 0` (where `a = 2 kappa I` may vanish).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::grid::{Grid, GridField};
use crate::linalg::SymMatrix;
use crate::tensor::TensorField;

/// Integer offsets and nonnegative weights with `a = sum_k w_k e_k e_k^T`.
pub fn selling_decomposition(a: &SymMatrix) -> [([i64; 2], f64); 3] {
    let dot = |u: [i64; 2], v: [i64; 2]| -> f64 {
        let (u0, u1, v0, v1) = (u[0] as f64, u[1] as f64, v[0] as f64, v[1] as f64);
        u0 * (a.m[0][0] * v0 + a.m[0][1] * v1) + u1 * (a.m[1][0] * v0 + a.m[1][1] * v1)
    };
    let scale = a.max_abs();
    let mut base = [[1i64, 0], [0, 1], [-1, -1]];
    // Selling's reduction: flip to an obtuse superbase
    'outer: for _ in 0..64 {
        for i in 0..3 {
            for j in (i + 1)..3 {
                if dot(base[i], base[j]) > 1e-14 * scale {
                    let (ei, ej) = (base[i], base[j]);
                    base = [[-ei[0], -ei[1]], ej, [ei[0] - ej[0], ei[1] - ej[1]]];
                    continue 'outer;
                }
            }
        }
        break;
    }
    let perp = |e: [i64; 2]| [-e[1], e[0]];
    let mut out = [([0i64; 2], 0.0); 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let (i, j) = match k {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let w = -dot(base[i], base[j]);
        *slot = (perp(base[k]), w.max(0.0));
    }
    out
}

/// Sparse symmetric discretization of `div(a grad .)` on a periodic 2-d grid.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    grid: Grid,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl DiffusionOperator {
    pub fn new(a: &TensorField) -> Result<Self> {
        let grid = a.grid();
        if grid.d != 2 {
            return Err(Error::Unsupported(format!(
                "the correlation solver is two-dimensional, got d = {}",
                grid.d
            )));
        }
        let len = grid.len();
        let inv_h2 = 1.0 / grid.spacing().powi(2);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(12); len];
        for idx in 0..len {
            for (e, w) in selling_decomposition(a.at(idx)) {
                if w == 0.0 {
                    continue;
                }
                if 2 * e[0].unsigned_abs() as usize >= grid.n
                    || 2 * e[1].unsigned_abs() as usize >= grid.n
                {
                    return Err(Error::Unsupported(
                        "tensor too anisotropic for the grid stencil".into(),
                    ));
                }
                let coef = 0.5 * w * inv_h2;
                for sign in [1i64, -1] {
                    let nb = grid.offset(idx, &[sign * e[0], sign * e[1]]);
                    rows[idx].push((nb, coef));
                    rows[nb].push((idx, coef));
                }
            }
        }
        let mut diag = vec![0.0; len];
        let mut row_ptr = Vec::with_capacity(len + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (idx, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                diag[idx] -= v;
                if c == idx {
                    // an offset that wraps onto itself contributes nothing
                    diag[idx] += v;
                    continue;
                }
                if last == Some(c) {
                    *vals.last_mut().expect("entry exists") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            grid,
            diag,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `out = L g`.
    pub fn apply(&self, g: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.diag[i] * g[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * g[self.cols[p]];
            }
            *o = acc;
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Entry `L[i][j]` (zero when outside the stencil).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&p| self.cols[p] == j)
            .map_or(0.0, |p| self.vals[p])
    }

    pub fn nonzeros(&self) -> usize {
        self.cols.len() + self.diag.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Implicit Euler stepper `(I - dt L) g_new = g_old` with Jacobi-preconditioned CG.
pub struct ImplicitEuler {
    op: DiffusionOperator,
    dt: f64,
    tol: f64,
    max_iter: usize,
    precond: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    b: Vec<f64>,
}

/// Relative residual target of the linear solves.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

impl ImplicitEuler {
    pub fn new(op: DiffusionOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config("dt", format!("must be > 0, got {dt}")));
        }
        let len = op.grid.len();
        let precond = op.diag.iter().map(|&d| 1.0 / (1.0 - dt * d)).collect();
        Ok(Self {
            max_iter: 10 * len,
            op,
            dt,
            tol: SOLVER_TOLERANCE,
            precond,
            r: vec![0.0; len],
            z: vec![0.0; len],
            p: vec![0.0; len],
            q: vec![0.0; len],
            b: vec![0.0; len],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn operator(&self) -> &DiffusionOperator {
        &self.op
    }

    fn apply_system(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi - self.dt * *o;
        }
    }

    /// Advances `g` by one step in place.
    pub fn step(&mut self, g: &mut [f64]) -> Result<SolveStats> {
        self.b.copy_from_slice(g);
        let b_norm = norm(&self.b);
        if b_norm == 0.0 {
            return Ok(SolveStats {
                iterations: 0,
                residual: 0.0,
            });
        }
        // warm start from the previous state
        let mut q = std::mem::take(&mut self.q);
        self.apply_system(g, &mut q);
        for ((r, b), qi) in self.r.iter_mut().zip(&self.b).zip(&q) {
            *r = b - qi;
        }
        self.q = q;
        let mut res = norm(&self.r) / b_norm;
        if res <= self.tol {
            return Ok(SolveStats {
                iterations: 0,
                residual: res,
            });
        }
        for ((z, r), m) in self.z.iter_mut().zip(&self.r).zip(&self.precond) {
            *z = r * m;
        }
        self.p.copy_from_slice(&self.z);
        let mut rz = dot(&self.r, &self.z);
        for it in 1..=self.max_iter {
            let mut q = std::mem::take(&mut self.q);
            self.apply_system(&self.p, &mut q);
            self.q = q;
            let alpha = rz / dot(&self.p, &self.q);
            for i in 0..g.len() {
                g[i] += alpha * self.p[i];
                self.r[i] -= alpha * self.q[i];
            }
            res = norm(&self.r) / b_norm;
            if res <= self.tol {
                // the exact solution has the mean of b; remove the solver's drift
                let shift = (self.b.iter().sum::<f64>() - g.iter().sum::<f64>()) / g.len() as f64;
                g.iter_mut().for_each(|v| *v += shift);
                return Ok(SolveStats {
                    iterations: it,
                    residual: res,
                });
            }
            for ((z, r), m) in self.z.iter_mut().zip(&self.r).zip(&self.precond) {
                *z = r * m;
            }
            let rz_new = dot(&self.r, &self.z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (p, z) in self.p.iter_mut().zip(&self.z) {
                *p = z + beta * *p;
            }
        }
        Err(Error::SolverDivergence {
            iterations: self.max_iter,
            residual: res,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// One implicit Euler step of `d_t g = div(a grad g)`.
pub fn step(g: &GridField, a: &TensorField, dt: f64) -> Result<GridField> {
    if g.grid() != a.grid() {
        return Err(Error::GridMismatch("field and tensor grids differ".into()));
    }
    let mut stepper = ImplicitEuler::new(DiffusionOperator::new(a)?, dt)?;
    let mut out = g.clone();
    stepper.step(out.values_mut())?;
    Ok(out)
}

/// Autocorrelation `g0(x) = |T^d|^-1 int theta0(y) theta0(y + x) dy` on the grid.
pub fn autocorrelation(theta0: &GridField) -> GridField {
    let grid = theta0.grid();
    let len = grid.len() as f64;
    let mut buf: Vec<Complex64> = theta0
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let mut fft = FftNd::new(grid);
    fft.forward(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    fft.inverse(&mut buf);
    let values = buf.iter().map(|c| c.re / (len * len)).collect();
    GridField::from_values(grid, values).expect("same grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub g_at_0: f64,
    pub l2_norm: f64,
    pub linf_norm: f64,
}

impl TraceRow {
    fn of(t: f64, g: &GridField) -> Self {
        Self {
            t,
            g_at_0: g.at_origin(),
            l2_norm: g.l2_norm(),
            linf_norm: g.linf_norm(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub field: GridField,
}

#[derive(Debug, Clone)]
pub struct CorrelationRun {
    pub trace: Vec<TraceRow>,
    pub snapshots: Vec<Snapshot>,
    /// Largest `|mean(g(t)) - mean(g0)|` seen along the run.
    pub mean_drift: f64,
    /// Largest `||g(t+dt)||_2 - ||g(t)||_2` (positive means an increase).
    pub max_l2_increase: f64,
    pub total_iterations: usize,
    pub warnings: Vec<String>,
}

impl CorrelationRun {
    pub fn g_at_origin(&self) -> Vec<(f64, f64)> {
        self.trace.iter().map(|r| (r.t, r.g_at_0)).collect()
    }

    pub fn l2(&self) -> Vec<(f64, f64)> {
        self.trace.iter().map(|r| (r.t, r.l2_norm)).collect()
    }

    /// `g(t, 0)` linearly interpolated from the trace.
    pub fn g_at(&self, t: f64) -> Option<f64> {
        interpolate(&self.g_at_origin(), t)
    }
}

pub(crate) fn interpolate(series: &[(f64, f64)], t: f64) -> Option<f64> {
    let pos = series.iter().position(|&(s, _)| s >= t - 1e-12)?;
    if (series[pos].0 - t).abs() <= 1e-12 || pos == 0 {
        return Some(series[pos].1);
    }
    let (t0, v0) = series[pos - 1];
    let (t1, v1) = series[pos];
    Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
}

/// Integrates up to `t_end` with step `dt`, recording the full trace and
/// snapshots nearest to the requested times.
pub fn solve(
    g0: &GridField,
    a: &TensorField,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<CorrelationRun> {
    if g0.grid() != a.grid() {
        return Err(Error::GridMismatch("field and tensor grids differ".into()));
    }
    if !(t_end > 0.0) {
        return Err(Error::config("tmax", format!("must be > 0, got {t_end}")));
    }
    let mut warnings = Vec::new();
    let scale = g0.linf_norm().max(f64::MIN_POSITIVE);
    if g0.mean().abs() > 1e-10 * scale {
        warnings.push(format!(
            "initial datum has nonzero mean {:.3e}; g(t,0) tends to that mean instead of decaying",
            g0.mean()
        ));
    }
    let mut stepper = ImplicitEuler::new(DiffusionOperator::new(a)?, dt)?;
    let steps = (t_end / dt - 1e-9).ceil() as usize;
    // The operator keeps the mean-free part mean-free; evolving it separately
    // and projecting after every solve stops solver round-off from building up
    // a spurious constant that would mask the decay at late times.
    let mut mean0 = g0.mean();
    // a mean at round-off level is treated as exactly zero
    if mean0.abs() <= 64.0 * f64::EPSILON * scale {
        mean0 = 0.0;
    }
    let mut fluct =
        GridField::from_values(g0.grid(), g0.values().iter().map(|v| v - mean0).collect())?;
    let mut g = g0.clone();
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(TraceRow::of(0.0, &g));
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = snapshot_times.to_vec();
    pending.sort_by(|a, b| a.total_cmp(b));
    let mut pending = pending.into_iter().peekable();
    while let Some(&ts) = pending.peek() {
        if ts > 0.5 * dt {
            break;
        }
        snapshots.push(Snapshot {
            t: 0.0,
            field: g.clone(),
        });
        pending.next();
    }
    let mut mean_drift = 0.0f64;
    let mut max_l2_increase = f64::NEG_INFINITY;
    let mut total_iterations = 0;
    let mut prev_l2 = g.l2_norm();
    for s in 1..=steps {
        let stats = stepper.step(fluct.values_mut())?;
        total_iterations += stats.iterations;
        let m = fluct.mean();
        fluct.values_mut().iter_mut().for_each(|v| *v -= m);
        for (gv, fv) in g.values_mut().iter_mut().zip(fluct.values()) {
            *gv = mean0 + fv;
        }
        let t = s as f64 * dt;
        let row = TraceRow::of(t, &g);
        mean_drift = mean_drift.max((g.mean() - g0.mean()).abs());
        max_l2_increase = max_l2_increase.max(row.l2_norm - prev_l2);
        prev_l2 = row.l2_norm;
        trace.push(row);
        while let Some(&ts) = pending.peek() {
            if ts > t + 0.5 * dt {
                break;
            }
            snapshots.push(Snapshot {
                t,
                field: g.clone(),
            });
            pending.next();
        }
    }
    Ok(CorrelationRun {
        trace,
        snapshots,
        mean_drift,
        max_l2_increase,
        total_iterations,
        warnings,
    })
}

/// Exponential fit `v(t) ~ prefactor * exp(-rate t)` on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub window: [f64; 2],
    /// Largest relative deviation of the data from the fit on the window.
    pub residual: f64,
    pub points: usize,
}

/// Transient skipped before fitting, `max(1, 2 / (1 - alpha))`.
pub fn default_discard(alpha: f64) -> f64 {
    (2.0 / (1.0 - alpha)).max(1.0)
}

/// Least-squares line through `(t, log v)` for `t >= discard`.
pub fn fit_decay(trace: &[(f64, f64)], discard: f64) -> Result<DecayFit> {
    fit_decay_window(trace, discard, f64::INFINITY)
}

/// Least-squares line through `(t, log v)` for `t_lo <= t <= t_hi`.
pub fn fit_decay_window(trace: &[(f64, f64)], t_lo: f64, t_hi: f64) -> Result<DecayFit> {
    let window: Vec<(f64, f64)> = trace
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t_lo - 1e-12 && t <= t_hi + 1e-12)
        .collect();
    if window.len() < 10 {
        return Err(Error::Fit(format!(
            "need at least 10 points in the fit window, got {}",
            window.len()
        )));
    }
    if let Some(&(t, v)) = window.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Fit(format!(
            "non-positive value {v:e} at t = {t}; the signal is not decaying or hit the noise floor"
        )));
    }
    let m = window.len() as f64;
    let (st, sy) = window
        .iter()
        .fold((0.0, 0.0), |(st, sy), &(t, v)| (st + t, sy + v.ln()));
    let (tm, ym) = (st / m, sy / m);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, v) in &window {
        sxx += (t - tm) * (t - tm);
        sxy += (t - tm) * (v.ln() - ym);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("fit window has zero time extent".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let residual = window
        .iter()
        .map(|&(t, v)| ((intercept + slope * t).exp() - v).abs() / v)
        .fold(0.0, f64::max);
    Ok(DecayFit {
        rate: -slope,
        prefactor: intercept.exp(),
        window: [window[0].0, window[window.len() - 1].0],
        residual,
        points: window.len(),
    })
}

/// `||g(t)||_2` started from a discrete delta at the origin.
pub fn nash_profile(a: &TensorField, dt: f64, t_end: f64) -> Result<Vec<(f64, f64)>> {
    let grid = a.grid();
    let mut delta = GridField::zeros(grid);
    delta.values_mut()[0] = 1.0 / grid.cell_volume();
    let run = solve(&delta, a, t_end, dt, &[])?;
    Ok(run.l2())
}

/// Least-squares slope of `log v` against `log t` over `t_lo <= t <= t_hi`.
pub fn log_log_slope(trace: &[(f64, f64)], t_lo: f64, t_hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .copied()
        .filter(|&(t, v)| t >= t_lo && t <= t_hi && t > 0.0 && v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit("need at least 3 points for a slope".into()));
    }
    let m = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumConfig;
    use crate::tensor::assemble_tensor;
    use proptest::prelude::*;

    fn identity(n: usize) -> TensorField {
        TensorField::constant(Grid::square(n), SymMatrix::identity(2)).unwrap()
    }

    fn reconstruct(parts: &[([i64; 2], f64); 3]) -> SymMatrix {
        let mut out = SymMatrix::zeros(2);
        for (e, w) in parts {
            let v = [e[0] as f64, e[1] as f64];
            out = out.add(&SymMatrix::outer(&v).scale(*w));
        }
        out
    }

    #[test]
    fn selling_identity_is_five_point() {
        let parts = selling_decomposition(&SymMatrix::identity(2));
        let r = reconstruct(&parts);
        assert!(r.sub(&SymMatrix::identity(2)).max_abs() < 1e-15);
        assert!(parts
            .iter()
            .all(|(e, w)| *w == 0.0 || e[0].abs() + e[1].abs() == 1));
    }

    proptest! {
        #[test]
        fn selling_reconstructs_spd(l1 in 0.01f64..10.0, l2 in 0.01f64..10.0, th in 0.0f64..3.2) {
            let (c, s) = (th.cos(), th.sin());
            let mut a = SymMatrix::zeros(2);
            a.set(0, 0, l1 * c * c + l2 * s * s);
            a.set(1, 1, l1 * s * s + l2 * c * c);
            a.set(0, 1, (l1 - l2) * c * s);
            let parts = selling_decomposition(&a);
            prop_assert!(parts.iter().all(|(_, w)| *w >= 0.0));
            let r = reconstruct(&parts);
            prop_assert!(r.sub(&a).max_abs() < 1e-10 * a.max_abs());
        }
    }

    #[test]
    fn operator_is_symmetric_with_nonnegative_offdiagonals() {
        let cfg = SpectrumConfig::new(2, 0.5, 0.0, 5).unwrap();
        let a = assemble_tensor(&cfg, 1e-3, 12).unwrap();
        let op = DiffusionOperator::new(&a).unwrap();
        let len = a.grid().len();
        for i in 0..len {
            let mut row_sum = op.entry(i, i);
            for j in 0..len {
                if i != j {
                    let v = op.entry(i, j);
                    assert!(v >= 0.0);
                    assert!((v - op.entry(j, i)).abs() < 1e-12);
                    row_sum += v;
                }
            }
            assert!(row_sum.abs() < 1e-9, "row {i} sums to {row_sum}");
        }
    }

    #[test]
    fn constants_are_stationary() {
        let cfg = SpectrumConfig::new(2, 0.5, 0.0, 7).unwrap();
        let a = assemble_tensor(&cfg, 1e-3, 16).unwrap();
        let g = GridField::constant(a.grid(), 1.0);
        let out = step(&g, &a, 0.01).unwrap();
        assert_eq!(out.values(), g.values());
    }

    #[test]
    fn heat_mode_decays_like_exp_minus_t() {
        let a = identity(128);
        let g0 = GridField::from_fn(a.grid(), |x| x[0].cos());
        let run = solve(&g0, &a, 0.1, 1e-2, &[0.1]).unwrap();
        let g = &run.snapshots[0].field;
        let exact = GridField::from_fn(a.grid(), |x| (-0.1f64).exp() * x[0].cos());
        assert!(g.max_abs_diff(&exact) < 1e-3);
        // implicit Euler error is first order in dt; at dt = 1e-3 it holds up to t = 1
        let run = solve(&g0, &a, 1.0, 1e-3, &[1.0]).unwrap();
        let exact = GridField::from_fn(a.grid(), |x| (-1.0f64).exp() * x[0].cos());
        assert!(run.snapshots[0].field.max_abs_diff(&exact) < 1e-3);
    }

    #[test]
    fn autocorrelation_of_cosine() {
        let grid = Grid::square(32);
        let theta = GridField::from_fn(grid, |x| x[0].cos());
        let g = autocorrelation(&theta);
        let expect = GridField::from_fn(grid, |x| 0.5 * x[0].cos());
        assert!(g.max_abs_diff(&expect) < 1e-13);
        let c = autocorrelation(&GridField::constant(grid, 3.0));
        assert!(c.values().iter().all(|v| (v - 9.0).abs() < 1e-12));
    }

    #[test]
    fn fit_recovers_exponentials() {
        let trace: Vec<(f64, f64)> = (0..50)
            .map(|i| (i as f64 * 0.1, (-2.0 * i as f64 * 0.1).exp()))
            .collect();
        let f = fit_decay(&trace, 0.0).unwrap();
        assert!((f.rate - 2.0).abs() < 1e-12 && (f.prefactor - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        let trace: Vec<(f64, f64)> = (0..50)
            .map(|i| (i as f64, 5.0 * (-0.3 * i as f64).exp()))
            .collect();
        let f = fit_decay(&trace, 0.0).unwrap();
        assert!((f.rate - 0.3).abs() < 1e-12 && (f.prefactor - 5.0).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_nonpositive_and_short_windows() {
        let mut trace: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, (-(i as f64)).exp())).collect();
        assert!(fit_decay(&trace, 15.0).is_err());
        trace[12].1 = -1e-30;
        assert!(matches!(fit_decay(&trace, 0.0), Err(Error::Fit(_))));
    }

    #[test]
    fn default_discard_follows_alpha() {
        assert_eq!(default_discard(0.5), 4.0);
        assert_eq!(default_discard(0.0001).max(1.0), default_discard(0.0001));
    }

    #[test]
    fn rejects_three_dimensional_solves() {
        let a = TensorField::constant(Grid::new(4, 3).unwrap(), SymMatrix::identity(3)).unwrap();
        assert!(matches!(
            DiffusionOperator::new(&a),
            Err(Error::Unsupported(_))
        ));
    }
}
