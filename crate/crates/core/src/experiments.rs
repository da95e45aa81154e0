//! Subcommand drivers shared by the `kraichnan` binary, the examples and the
//! acceptance tests.
//!
//! Every driver first resolves its parameters from an [`ExperimentConfig`]
//! (validating all ranges before any computation), then runs, writes its
//! artifacts atomically under the output directory and finishes with a
//! `manifest.json`. Hard invariant failures do not abort a run; they are
//! collected in [`Outcome::violations`] so the artifacts remain inspectable.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{check_nonnegative, check_open, check_positive, ExperimentConfig, TensorKind};
use crate::correlation::{self, CorrelationRun, DecayFit, TraceRow};
use crate::error::{Error, Result};
use crate::flows::{FlowModel, FlowParams};
use crate::grid::{Grid, GridField};
use crate::inequalities::{self, RatioReport, Suite};
use crate::linalg::SymMatrix;
use crate::output::{svg_line_plot, ArtifactDir, Manifest, Series};
use crate::spectrum::{CutoffProfile, ShearSpectrum, SpectrumConfig};
use crate::tensor::{self, BoundReport, TensorField};
use crate::transport::{self, dealias_cutoff, EnsembleStats, GapReport, McSpec, SweepRow};

/// Relative tolerance for mean conservation.
pub const MEAN_TOLERANCE: f64 = 1e-12;
/// Relative tolerance for a per-step norm increase. The linear solves stop
/// at a relative residual of `1e-10`, so anything above that is a real
/// increase rather than solver noise.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

/// Result of one subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub subcommand: &'static str,
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    pub summary: Value,
    pub violations: Vec<String>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// The outcome as an error when an invariant failed.
    pub fn into_result(self) -> Result<Self> {
        if self.ok() {
            Ok(self)
        } else {
            Err(Error::InvariantViolated(self.violations.join("; ")))
        }
    }
}

fn out_dir(cfg: &ExperimentConfig, sub: &str) -> PathBuf {
    cfg.out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(sub))
}

fn finish<P: Serialize>(
    sub: &'static str,
    cfg: &ExperimentConfig,
    seed: Option<u64>,
    params: &P,
    mut dir: ArtifactDir,
    summary: Value,
    violations: Vec<String>,
) -> Result<Outcome> {
    let mut manifest = Manifest::new(sub, cfg, seed);
    manifest.params = serde_json::to_value(params)?;
    manifest.outputs = dir.written().to_vec();
    manifest.outputs.push("manifest.json".into());
    dir.json("manifest.json", &manifest)?;
    Ok(Outcome {
        subcommand: sub,
        out_dir: dir.root().to_path_buf(),
        outputs: dir.written().to_vec(),
        summary,
        violations,
    })
}

fn alpha_of(cfg: &ExperimentConfig, default: f64) -> Result<f64> {
    check_open("alpha", cfg.alpha.unwrap_or(default), 0.0, 1.0)
}

fn grid_of(cfg: &ExperimentConfig, default: usize) -> Result<usize> {
    let n = cfg.grid.unwrap_or(default);
    if n < 4 {
        return Err(Error::config(
            "grid",
            format!("need at least 4 points per axis, got {n}"),
        ));
    }
    Ok(n)
}

/// `kmax` from the config, else `default`, checked against `limit`.
fn kmax_of(cfg: &ExperimentConfig, default: usize, limit: usize, why: &str) -> Result<usize> {
    let k = cfg.kmax.unwrap_or(default);
    if k < 1 {
        return Err(Error::config("kmax", "must be >= 1"));
    }
    if k > limit {
        return Err(Error::config(
            "kmax",
            format!("{k} exceeds {limit}, the largest {why} on this grid"),
        ));
    }
    Ok(k)
}

fn kappa_label(k: f64) -> String {
    format!("{k:e}")
}

fn plot_enabled(cfg: &ExperimentConfig) -> bool {
    cfg.plot.unwrap_or(true)
}

/// Starting scalar of every transport experiment, `cos(x_1)`.
pub fn initial_scalar(grid: Grid) -> GridField {
    GridField::from_fn(grid, |x| x[0].cos())
}

/// Autocorrelation of [`initial_scalar`], `cos(x_1) / 2`.
pub fn initial_correlation(grid: Grid) -> GridField {
    GridField::from_fn(grid, |x| 0.5 * x[0].cos())
}

fn check_trace_invariants(
    run: &CorrelationRun,
    g0: &GridField,
    label: &str,
    out: &mut Vec<String>,
) {
    let scale = g0.linf_norm().max(f64::MIN_POSITIVE);
    if run.mean_drift > MEAN_TOLERANCE * scale {
        out.push(format!("{label}: mean drifted by {:.3e}", run.mean_drift));
    }
    if run.max_l2_increase > MONOTONE_TOLERANCE * g0.l2_norm() {
        out.push(format!(
            "{label}: ||g||_2 increased by {:.3e} in one step",
            run.max_l2_increase
        ));
    }
}

fn check_ensemble_invariants(
    stats: &EnsembleStats,
    theta_scale: f64,
    kappa: f64,
    label: &str,
    out: &mut Vec<String>,
) {
    if stats.max_mean_drift > MEAN_TOLERANCE * theta_scale {
        out.push(format!(
            "{label}: scalar mean drifted by {:.3e}",
            stats.max_mean_drift
        ));
    }
    if kappa > 0.0 && stats.max_relative_increase > MONOTONE_TOLERANCE {
        out.push(format!(
            "{label}: ||theta||_2 increased by a relative {:.3e} in one step",
            stats.max_relative_increase
        ));
    }
}

// ---------------------------------------------------------------- correlation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationParams {
    pub alpha: f64,
    pub eta: f64,
    pub rho: CutoffProfile,
    pub kmax: usize,
    pub grid: usize,
    pub kappas: Vec<f64>,
    pub dt: f64,
    pub tmax: f64,
    pub fit_window: [f64; 2],
    pub snapshots: Vec<f64>,
}

impl CorrelationParams {
    pub const DEFAULT_GRID: usize = 128;
    pub const DEFAULT_DT: f64 = 1e-2;
    pub const DEFAULT_TMAX: f64 = 20.0;
    pub const DEFAULT_KAPPA: f64 = 1e-3;

    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        let alpha = alpha_of(cfg, 0.5)?;
        let eta = check_nonnegative("eta", cfg.eta.unwrap_or(0.0))?;
        let grid = grid_of(cfg, Self::DEFAULT_GRID)?;
        let kmax = kmax_of(cfg, (grid - 1) / 2, (grid - 1) / 2, "resolvable mode")?;
        let kappas = cfg.kappas(&[Self::DEFAULT_KAPPA]);
        if kappas.is_empty() {
            return Err(Error::config("kappa_list", "must not be empty"));
        }
        for &k in &kappas {
            check_nonnegative("kappa", k)?;
        }
        let dt = check_positive("dt", cfg.dt.unwrap_or(Self::DEFAULT_DT))?;
        let tmax = check_positive("tmax", cfg.tmax.unwrap_or(Self::DEFAULT_TMAX))?;
        let lo = cfg
            .fit_start
            .unwrap_or_else(|| correlation::default_discard(alpha));
        let hi = cfg.fit_end.unwrap_or(tmax);
        if !(lo >= 0.0 && lo < hi && hi <= tmax + 1e-12) {
            return Err(Error::config(
                "fit_start",
                format!("fit window [{lo}, {hi}] must satisfy 0 <= start < end <= tmax = {tmax}"),
            ));
        }
        let snapshots = cfg.snapshots.clone().unwrap_or_default();
        if let Some(&s) = snapshots.iter().find(|&&s| !(0.0..=tmax).contains(&s)) {
            return Err(Error::config(
                "snapshots",
                format!("time {s} outside [0, {tmax}]"),
            ));
        }
        SpectrumConfig::new(2, alpha, eta, kmax)?;
        Ok(Self {
            alpha,
            eta,
            rho: cfg.rho.unwrap_or_default(),
            kmax,
            grid,
            kappas,
            dt,
            tmax,
            fit_window: [lo, hi],
            snapshots,
        })
    }

    pub fn spectrum(&self) -> Result<SpectrumConfig> {
        Ok(SpectrumConfig::new(2, self.alpha, self.eta, self.kmax)?.with_rho(self.rho))
    }
}

/// One diffusivity of a correlation run.
#[derive(Debug, Clone)]
pub struct CorrelationCase {
    pub kappa: f64,
    pub run: CorrelationRun,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct FitRow {
    kappa: f64,
    rate: f64,
    prefactor: f64,
    residual: f64,
    t_lo: f64,
    t_hi: f64,
    points: usize,
}

/// Solves the correlation equation from `cos(x_1)/2` for every diffusivity.
pub fn correlation_cases(p: &CorrelationParams) -> Result<Vec<CorrelationCase>> {
    let spec = p.spectrum()?;
    let g0 = initial_correlation(Grid::square(p.grid));
    p.kappas
        .par_iter()
        .map(|&kappa| {
            let a = tensor::assemble_tensor(&spec, kappa, p.grid)?;
            let run = correlation::solve(&g0, &a, p.tmax, p.dt, &p.snapshots)?;
            let fit = correlation::fit_decay_window(
                &run.g_at_origin(),
                p.fit_window[0],
                p.fit_window[1],
            )?;
            Ok(CorrelationCase { kappa, run, fit })
        })
        .collect()
}

/// `correlation`: decay of `g(t, 0)` for one or more diffusivities.
pub fn cmd_correlation(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = CorrelationParams::resolve(cfg)?;
    let mut dir = ArtifactDir::create(out_dir(cfg, "correlation"))?;
    let cases = correlation_cases(&p)?;
    let g0 = initial_correlation(Grid::square(p.grid));
    let single = cases.len() == 1;
    let mut violations = Vec::new();
    let mut fits = Vec::new();
    let mut series = Vec::new();
    for c in &cases {
        let suffix = if single {
            String::new()
        } else {
            format!("_kappa_{}", kappa_label(c.kappa))
        };
        let rows: Vec<TraceRow> = c.run.trace.clone();
        dir.csv(&format!("trace{suffix}.csv"), &rows)?;
        dir.json(
            &format!("fit{suffix}.json"),
            &json!({ "kappa": c.kappa, "fit": c.fit, "warnings": c.run.warnings }),
        )?;
        for s in &c.run.snapshots {
            let params =
                json!({ "kappa": c.kappa, "alpha": p.alpha, "eta": p.eta, "kmax": p.kmax });
            dir.snapshot(
                &format!("snapshot{suffix}_t{}.txt", s.t),
                &s.field,
                s.t,
                &params,
            )?;
        }
        check_trace_invariants(&c.run, &g0, &format!("kappa={}", c.kappa), &mut violations);
        fits.push(FitRow {
            kappa: c.kappa,
            rate: c.fit.rate,
            prefactor: c.fit.prefactor,
            residual: c.fit.residual,
            t_lo: c.fit.window[0],
            t_hi: c.fit.window[1],
            points: c.fit.points,
        });
        series.push(Series {
            label: format!("kappa = {}", c.kappa),
            points: c.run.g_at_origin(),
        });
    }
    if !single {
        dir.csv("summary.csv", &fits)?;
    }
    if plot_enabled(cfg) {
        dir.text(
            "decay.svg",
            &svg_line_plot(&series, "g(t, 0)", "t", "g(t, 0)", true),
        )?;
    }
    let rates: Vec<f64> = fits.iter().map(|f| f.rate).collect();
    let spread = rate_spread(&rates);
    let summary = json!({ "fits": fits, "max_pairwise_rate_spread": spread });
    finish("correlation", cfg, None, &p, dir, summary, violations)
}

/// Largest `|r_i - r_j| / min(r_i, r_j)` over pairs.
pub fn rate_spread(rates: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in rates.iter().enumerate() {
        for b in &rates[i + 1..] {
            worst = worst.max((a - b).abs() / a.min(*b));
        }
    }
    worst
}

// ------------------------------------------------------------------------ mc

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McParams {
    pub spec: McSpec,
    pub kappas: Vec<f64>,
    pub pde_grid: usize,
    pub seed: u64,
}

impl McParams {
    pub const DEFAULT_GRID: usize = 64;
    pub const DEFAULT_DT: f64 = 1e-2;
    pub const DEFAULT_TMAX: f64 = 4.0;
    pub const DEFAULT_EPS: f64 = 0.1;
    pub const DEFAULT_REALIZATIONS: usize = 32;
    pub const DEFAULT_MODEL: FlowModel = FlowModel::WhiteKraichnan;

    pub fn resolve(cfg: &ExperimentConfig, seed: u64, default_kappas: &[f64]) -> Result<Self> {
        let model = cfg.model.unwrap_or(Self::DEFAULT_MODEL);
        if !FlowModel::ALL_RANDOM.contains(&model) {
            return Err(Error::config(
                "model",
                format!("`{model}` is not a random flow model"),
            ));
        }
        let alpha = alpha_of(cfg, model.default_alpha())?;
        let eta = check_nonnegative("eta", cfg.eta.unwrap_or(0.0))?;
        let n = grid_of(cfg, Self::DEFAULT_GRID)?;
        let kmax = kmax_of(cfg, dealias_cutoff(n), dealias_cutoff(n), "dealiased mode")?;
        let dt = check_positive("dt", cfg.dt.unwrap_or(Self::DEFAULT_DT))?;
        let t_end = check_positive("tmax", cfg.tmax.unwrap_or(Self::DEFAULT_TMAX))?;
        let eps = check_positive("eps", cfg.eps.unwrap_or(Self::DEFAULT_EPS))?;
        let realizations = cfg.realizations.unwrap_or(Self::DEFAULT_REALIZATIONS);
        if realizations < 2 {
            return Err(Error::config(
                "realizations",
                format!("need at least 2, got {realizations}"),
            ));
        }
        let kappas = cfg.kappas(default_kappas);
        if kappas.is_empty() {
            return Err(Error::config("kappa_list", "must not be empty"));
        }
        for &k in &kappas {
            check_nonnegative("kappa", k)?;
        }
        let pde_grid = cfg.pde_grid.unwrap_or(n);
        if pde_grid < 2 * kmax + 1 {
            return Err(Error::Aliasing {
                n: pde_grid,
                kmax,
                required: 2 * kmax + 1,
            });
        }
        let mut params = FlowParams::new(alpha, kmax, n).with_eta(eta);
        params.rho = cfg.rho.unwrap_or_default();
        let spec = McSpec {
            model,
            params,
            eps,
            kappa: kappas[0],
            t_end,
            dt,
            realizations,
        };
        // building one flow validates eps, dt and the model parameters
        spec.flow(seed)?;
        for (field, len) in [("eps", spec.effective_eps()), ("tmax", t_end)] {
            let r = len / dt;
            if (r - r.round()).abs() > 1e-6 * r.max(1.0) || r.round() < 1.0 {
                return Err(Error::config(
                    "dt",
                    format!("dt = {dt} must divide {field} = {len}"),
                ));
            }
        }
        Ok(Self {
            spec,
            kappas,
            pde_grid,
            seed,
        })
    }

    /// Tensor of the white-in-time limit, for the models that have one.
    pub fn limit_tensor(&self, kappa: f64) -> Result<Option<TensorField>> {
        let p = &self.spec.params;
        Ok(match self.spec.model {
            FlowModel::WhiteKraichnan | FlowModel::SmoothMode => Some(tensor::assemble_tensor(
                &p.spectrum()?,
                kappa,
                self.pde_grid,
            )?),
            FlowModel::WhiteShear | FlowModel::OrientedShear => {
                Some(tensor::assemble_shear_tensor(
                    &ShearSpectrum::new(p.alpha, p.kmax)?,
                    kappa,
                    &[0.0, 0.0],
                    self.pde_grid,
                )?)
            }
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct EnergyRow {
    t: f64,
    energy: f64,
    stderr: f64,
}

/// One row of the MC against correlation-equation comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckRow {
    pub t: f64,
    pub mc_energy: f64,
    pub stderr: f64,
    /// `|T^2| g(t, 0)` from the correlation equation.
    pub pde_energy: f64,
    /// `(mc - pde) / stderr`.
    pub z: f64,
}

/// Step of the correlation solve used for cross-checks.
pub const CROSSCHECK_DT: f64 = 1e-3;

/// Predicted mean energy `|T^2| g(t, 0)` at `times`, from the correlation
/// equation with tensor `a` started at `cos(x_1)/2`.
pub fn predicted_energy(a: &TensorField, t_end: f64, dt: f64, times: &[f64]) -> Result<Vec<f64>> {
    let grid = a.grid();
    let run = correlation::solve(&initial_correlation(grid), a, t_end, dt, &[])?;
    times
        .iter()
        .map(|&t| {
            run.g_at(t)
                .map(|g| g * grid.volume())
                .ok_or_else(|| Error::Degenerate(format!("time {t} outside the correlation run")))
        })
        .collect()
}

/// Compares an ensemble with the correlation equation at `times`.
pub fn cross_check(
    stats: &EnsembleStats,
    a: &TensorField,
    t_end: f64,
    pde_dt: f64,
    times: &[f64],
) -> Result<Vec<CrossCheckRow>> {
    let pde = predicted_energy(a, t_end, pde_dt, times)?;
    times
        .iter()
        .zip(pde)
        .map(|(&t, pde_energy)| {
            let (mc, se) = stats
                .at(t)
                .ok_or_else(|| Error::Degenerate(format!("time {t} outside the ensemble")))?;
            Ok(CrossCheckRow {
                t,
                mc_energy: mc,
                stderr: se,
                pde_energy,
                z: (mc - pde_energy) / se,
            })
        })
        .collect()
}

/// `mc`: ensemble energy of `cos(x_1)` transported by one flow model.
pub fn cmd_mc(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let p = McParams::resolve(cfg, seed, &[1e-3])?;
    if p.kappas.len() != 1 {
        return Err(Error::config(
            "kappa_list",
            "mc takes a single kappa; use `sweep` for a list",
        ));
    }
    let mut dir = ArtifactDir::create(out_dir(cfg, "mc"))?;
    let grid = p.spec.params.grid();
    let theta0 = initial_scalar(grid);
    let stats = transport::mc_energy(&p.spec, &theta0, seed)?;
    let rows: Vec<EnergyRow> = stats
        .times
        .iter()
        .zip(&stats.mean_energy)
        .zip(&stats.stderr)
        .map(|((&t, &energy), &stderr)| EnergyRow { t, energy, stderr })
        .collect();
    dir.csv("energy.csv", &rows)?;
    dir.json("final_energies.json", &json!({ "seeds": transport::realization_seeds(seed, p.spec.realizations), "final_energies": stats.final_energies }))?;
    let mut violations = Vec::new();
    check_ensemble_invariants(
        &stats,
        theta0.linf_norm(),
        p.spec.kappa,
        p.spec.model.name(),
        &mut violations,
    );
    let mut series = vec![Series {
        label: format!("{} ensemble", p.spec.model),
        points: rows.iter().map(|r| (r.t, r.energy)).collect(),
    }];
    let mut crosscheck = Value::Null;
    if p.spec.model.is_white() {
        if let Some(a) = p.limit_tensor(p.spec.kappa)? {
            let times: Vec<f64> = (1..=8).map(|k| p.spec.t_end * k as f64 / 8.0).collect();
            let pde_dt = CROSSCHECK_DT.min(p.spec.dt);
            let check = cross_check(&stats, &a, p.spec.t_end, pde_dt, &times)?;
            dir.csv("crosscheck.csv", &check)?;
            let max_z = check.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
            crosscheck = json!({ "pde_grid": p.pde_grid, "pde_dt": pde_dt, "max_abs_z": max_z, "rows": check });
            dir.json("crosscheck.json", &crosscheck)?;
            series.push(Series {
                label: "correlation equation".into(),
                points: check.iter().map(|r| (r.t, r.pde_energy)).collect(),
            });
        }
    }
    if plot_enabled(cfg) {
        dir.text(
            "energy.svg",
            &svg_line_plot(&series, "mean ||theta||^2", "t", "energy", true),
        )?;
    }
    let summary = json!({
        "model": p.spec.model,
        "kappa": p.spec.kappa,
        "initial_energy": stats.initial_energy,
        "final_energy": stats.final_mean(),
        "final_stderr": stats.final_stderr(),
        "crosscheck": crosscheck,
    });
    finish("mc", cfg, Some(seed), &p, dir, summary, violations)
}

// --------------------------------------------------------------------- sweep

/// Default sweep: three decades of diffusivity plus the conservation floor.
pub const DEFAULT_SWEEP_KAPPAS: [f64; 4] = [1e-2, 1e-3, 1e-4, 0.0];

#[derive(Debug, Clone, Copy, Serialize)]
struct SweepCsvRow {
    kappa: f64,
    dissipated: f64,
    stderr: f64,
}

/// Sweep rows and the vanishing-diffusivity verdict.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub gap: Option<GapReport>,
    pub initial_energy: f64,
}

pub fn run_sweep(p: &McParams) -> Result<SweepResult> {
    let theta0 = initial_scalar(p.spec.params.grid());
    let rows = transport::dissipation_sweep(&p.spec, &p.kappas, &theta0, p.seed)?;
    let e0 = theta0.l2_norm_sq();
    let positive = rows.iter().filter(|r| r.kappa > 0.0).count();
    let gap = if positive >= 3 {
        Some(transport::energy_gap_witness(&rows, e0)?)
    } else {
        None
    };
    Ok(SweepResult {
        rows,
        gap,
        initial_energy: e0,
    })
}

/// `sweep`: dissipated energy at `tmax` across a list of diffusivities.
pub fn cmd_sweep(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let p = McParams::resolve(cfg, seed, &DEFAULT_SWEEP_KAPPAS)?;
    if p.kappas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("kappa_list", "must be strictly decreasing"));
    }
    let mut dir = ArtifactDir::create(out_dir(cfg, "sweep"))?;
    let res = run_sweep(&p)?;
    let csv_rows: Vec<SweepCsvRow> = res
        .rows
        .iter()
        .map(|r| SweepCsvRow {
            kappa: r.kappa,
            dissipated: r.dissipated,
            stderr: r.stderr,
        })
        .collect();
    dir.csv("sweep.csv", &csv_rows)?;
    dir.json("sweep.json", &res)?;
    if let Some(g) = &res.gap {
        dir.json("gap.json", g)?;
    }
    let mut violations = Vec::new();
    for r in &res.rows {
        if r.max_mean_drift > MEAN_TOLERANCE {
            violations.push(format!(
                "kappa={}: scalar mean drifted by {:.3e}",
                r.kappa, r.max_mean_drift
            ));
        }
        if r.kappa > 0.0 && r.max_relative_increase > MONOTONE_TOLERANCE {
            violations.push(format!(
                "kappa={}: ||theta||_2 increased by a relative {:.3e} in one step",
                r.kappa, r.max_relative_increase
            ));
        }
    }
    if plot_enabled(cfg) {
        let pts: Vec<(f64, f64)> = res
            .rows
            .iter()
            .filter(|r| r.kappa > 0.0)
            .map(|r| (r.kappa.log10(), r.relative))
            .collect();
        let s = [Series {
            label: format!("{}", p.spec.model),
            points: pts,
        }];
        dir.text(
            "sweep.svg",
            &svg_line_plot(
                &s,
                "dissipated fraction at tmax",
                "log10 kappa",
                "fraction",
                false,
            ),
        )?;
    }
    let summary = json!({
        "model": p.spec.model,
        "rows": res.rows,
        "verdict": res.gap.as_ref().map(|g| g.verdict),
    });
    finish("sweep", cfg, Some(seed), &p, dir, summary, violations)
}

// ------------------------------------------------------------- verify-tensor

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorParams {
    pub alpha: f64,
    pub eta: f64,
    pub rho: CutoffProfile,
    pub kappa: f64,
    pub kmax: usize,
    pub grid: usize,
    pub betas: Vec<f64>,
    pub directions: usize,
    pub eta_table: Vec<f64>,
    pub seed: u64,
}

impl TensorParams {
    pub const DEFAULT_KMAX: usize = 64;
    pub const DEFAULT_DIRECTIONS: usize = 64;
    pub const DEFAULT_ETA_TABLE: [f64; 3] = [0.2, 0.1, 0.05];

    pub fn resolve(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let alpha = alpha_of(cfg, 0.5)?;
        let eta = check_nonnegative("eta", cfg.eta.unwrap_or(0.0))?;
        let kappa = check_nonnegative("kappa", cfg.kappa.unwrap_or(0.0))?;
        let kmax = cfg.kmax.unwrap_or(Self::DEFAULT_KMAX);
        // the refinement doubles kmax on the same grid
        let grid = grid_of(cfg, 4 * kmax + 1)?;
        if grid < 4 * kmax + 1 {
            return Err(Error::Aliasing {
                n: grid,
                kmax: 2 * kmax,
                required: 4 * kmax + 1,
            });
        }
        let betas = match (&cfg.beta_list, cfg.beta) {
            (Some(l), _) => l.clone(),
            (None, Some(b)) => vec![b],
            (None, None) => vec![alpha, 0.5 * (alpha + 1.0), 1.0],
        };
        for &b in &betas {
            if !(b >= alpha && b <= 1.0) {
                return Err(Error::config(
                    "beta",
                    format!("must lie in [alpha, 1] = [{alpha}, 1], got {b}"),
                ));
            }
        }
        let directions = cfg.directions.unwrap_or(Self::DEFAULT_DIRECTIONS);
        if directions < 1 {
            return Err(Error::config("directions", "need at least one direction"));
        }
        SpectrumConfig::new(2, alpha, eta, kmax)?;
        Ok(Self {
            alpha,
            eta,
            rho: cfg.rho.unwrap_or_default(),
            kappa,
            kmax,
            grid,
            betas,
            directions,
            eta_table: Self::DEFAULT_ETA_TABLE.to_vec(),
            seed,
        })
    }

    pub fn spectrum(&self, eta: f64) -> Result<SpectrumConfig> {
        Ok(SpectrumConfig::new(2, self.alpha, eta, self.kmax)?.with_rho(self.rho))
    }
}

/// One row of the two-regime table: how the minima scale with `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub eta: f64,
    pub empirical_c: f64,
    /// min of `w.a w / |x|^2` over `0 < |x| <= eta`
    pub inner_quadratic: Option<f64>,
    /// `inner_quadratic * eta^{2 - 2 alpha}`, constant in `eta` when the
    /// inner regime behaves like `eta^{2 alpha - 2} |x|^2`
    pub inner_scaled: Option<f64>,
    /// min of `w.a w / |x|^{2 alpha}` over `|x| >= eta`
    pub outer: Option<f64>,
}

/// Two-regime minima for each `eta` at `beta = alpha`.
pub fn eta_table(p: &TensorParams, etas: &[f64]) -> Result<Vec<EtaRow>> {
    etas.par_iter()
        .map(|&eta| {
            let field = tensor::assemble_tensor(&p.spectrum(eta)?, p.kappa, p.grid)?;
            let r = tensor::verify_lower_bound(&field, p.alpha, p.directions, p.seed)?;
            let iq = r.regime_mins.inner_quadratic;
            Ok(EtaRow {
                eta,
                empirical_c: r.empirical_c,
                inner_quadratic: iq,
                inner_scaled: iq.map(|v| v * eta.powf(2.0 - 2.0 * p.alpha)),
                outer: r.regime_mins.outer,
            })
        })
        .collect()
}

/// Bound reports (with their `2 kmax` refinement) for every `beta`.
pub fn tensor_reports(p: &TensorParams) -> Result<Vec<(BoundReport, BoundReport)>> {
    let spec = p.spectrum(p.eta)?;
    let coarse = tensor::assemble_tensor(&spec, p.kappa, p.grid)?;
    let fine = tensor::assemble_tensor(&spec.with_kmax(2 * p.kmax), p.kappa, p.grid)?;
    p.betas
        .iter()
        .map(|&beta| {
            let mut base = tensor::verify_lower_bound(&coarse, beta, p.directions, p.seed)?;
            let refined = tensor::verify_lower_bound(&fine, beta, p.directions, p.seed)?;
            base.refinement_delta =
                Some((refined.empirical_c - base.empirical_c).abs() / base.empirical_c.abs());
            Ok((base, refined))
        })
        .collect()
}

/// `verify-tensor`: empirical lower bounds on the diffusion tensor.
pub fn cmd_verify_tensor(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let p = TensorParams::resolve(cfg, seed)?;
    let mut dir = ArtifactDir::create(out_dir(cfg, "verify-tensor"))?;
    let reports = tensor_reports(&p)?;
    let table = eta_table(&p, &p.eta_table)?;
    let base: Vec<&BoundReport> = reports.iter().map(|r| &r.0).collect();
    let refined: Vec<&BoundReport> = reports.iter().map(|r| &r.1).collect();
    dir.json(
        "report.json",
        &json!({ "reports": base, "refined": refined, "eta_table": table }),
    )?;
    dir.csv("eta_table.csv", &table)?;
    let mut violations = Vec::new();
    let grid = Grid::square(p.grid);
    let field = tensor::assemble_tensor(&p.spectrum(p.eta)?, p.kappa, p.grid)?;
    let min_eig = field.min_eigenvalue();
    // a(x) is a covariance difference, so it must be positive semidefinite
    let scale = field
        .values()
        .iter()
        .map(SymMatrix::max_abs)
        .fold(0.0, f64::max);
    if min_eig < -1e-12 * scale.max(1.0) {
        violations.push(format!(
            "tensor has a negative eigenvalue {min_eig:.3e} on the {}-point grid",
            grid.n
        ));
    }
    let summary = json!({
        "empirical_c": base.iter().map(|r| json!({ "beta": r.beta, "c": r.empirical_c, "refinement_delta": r.refinement_delta })).collect::<Vec<_>>(),
        "min_eigenvalue": min_eig,
    });
    finish(
        "verify-tensor",
        cfg,
        Some(seed),
        &p,
        dir,
        summary,
        violations,
    )
}

// -------------------------------------------------------------- nash-profile

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashParams {
    pub tensor: TensorKind,
    pub alpha: f64,
    pub eta: f64,
    pub rho: CutoffProfile,
    pub kappa: f64,
    pub kmax: usize,
    pub grid: usize,
    pub beta: f64,
    pub dt: f64,
    pub tmax: f64,
    pub fit_window: [f64; 2],
}

impl NashParams {
    pub const DEFAULT_GRID: usize = 128;
    pub const DEFAULT_DT: f64 = 1e-3;
    pub const DEFAULT_TMAX: f64 = 0.5;
    pub const DEFAULT_KAPPA: f64 = 1e-4;
    pub const DEFAULT_WINDOW: [f64; 2] = [0.05, 0.5];

    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        let alpha = alpha_of(cfg, 0.5)?;
        let eta = check_nonnegative("eta", cfg.eta.unwrap_or(0.0))?;
        let kappa = check_nonnegative("kappa", cfg.kappa.unwrap_or(Self::DEFAULT_KAPPA))?;
        let grid = grid_of(cfg, Self::DEFAULT_GRID)?;
        let kmax = kmax_of(cfg, (grid - 1) / 2, (grid - 1) / 2, "resolvable mode")?;
        let beta = cfg.beta.unwrap_or(alpha);
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::config(
                "beta",
                format!("must lie in (0,1), got {beta}"),
            ));
        }
        let dt = check_positive("dt", cfg.dt.unwrap_or(Self::DEFAULT_DT))?;
        let tmax = check_positive("tmax", cfg.tmax.unwrap_or(Self::DEFAULT_TMAX))?;
        let lo = cfg
            .fit_start
            .unwrap_or(Self::DEFAULT_WINDOW[0].min(0.1 * tmax));
        let hi = cfg.fit_end.unwrap_or(tmax);
        if !(lo > 0.0 && lo < hi && hi <= tmax + 1e-12) {
            return Err(Error::config(
                "fit_start",
                format!("slope window [{lo}, {hi}] must satisfy 0 < start < end <= tmax = {tmax}"),
            ));
        }
        SpectrumConfig::new(2, alpha, eta, kmax)?;
        Ok(Self {
            tensor: cfg.tensor.unwrap_or(TensorKind::Kraichnan),
            alpha,
            eta,
            rho: cfg.rho.unwrap_or_default(),
            kappa,
            kmax,
            grid,
            beta,
            dt,
            tmax,
            fit_window: [lo, hi],
        })
    }

    pub fn tensor_field(&self) -> Result<TensorField> {
        let grid = Grid::square(self.grid);
        match self.tensor {
            TensorKind::Identity => TensorField::constant(grid, SymMatrix::identity(2)),
            TensorKind::Kraichnan => tensor::assemble_tensor(
                &SpectrumConfig::new(2, self.alpha, self.eta, self.kmax)?.with_rho(self.rho),
                self.kappa,
                self.grid,
            ),
            TensorKind::Shear => tensor::assemble_shear_tensor(
                &ShearSpectrum::new(self.alpha, self.kmax)?,
                self.kappa,
                &[0.0, 0.0],
                self.grid,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct NashRow {
    t: f64,
    l2_norm: f64,
}

/// `nash-profile`: small-time decay of `||g(t)||_2` from a point mass.
pub fn cmd_nash_profile(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = NashParams::resolve(cfg)?;
    let mut dir = ArtifactDir::create(out_dir(cfg, "nash-profile"))?;
    let a = p.tensor_field()?;
    let trace = correlation::nash_profile(&a, p.dt, p.tmax)?;
    let rows: Vec<NashRow> = trace
        .iter()
        .map(|&(t, l2_norm)| NashRow { t, l2_norm })
        .collect();
    dir.csv("nash.csv", &rows)?;
    let slope = correlation::log_log_slope(&trace, p.fit_window[0], p.fit_window[1])?;
    let d = 2.0;
    let report = json!({
        "slope": slope,
        "window": p.fit_window,
        "heat_reference": -d / 4.0,
        "nash_reference": -d / (4.0 * (1.0 - p.beta)),
    });
    dir.json("slope.json", &report)?;
    if plot_enabled(cfg) {
        let pts: Vec<(f64, f64)> = trace
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|&(t, v)| (t.log10(), v))
            .collect();
        let s = [Series {
            label: "||g(t)||_2".into(),
            points: pts,
        }];
        dir.text(
            "nash.svg",
            &svg_line_plot(&s, "point-mass profile", "log10 t", "||g||_2", true),
        )?;
    }
    let mut violations = Vec::new();
    let increase = trace
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    if increase > MONOTONE_TOLERANCE * trace[0].1 {
        violations.push(format!("||g||_2 increased by {increase:.3e} in one step"));
    }
    finish("nash-profile", cfg, None, &p, dir, report, violations)
}

// ---------------------------------------------------------------------- ineq

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IneqParams {
    pub suites: Vec<Suite>,
    pub samples: usize,
    pub degree: usize,
    pub quad: Option<usize>,
    pub seed: u64,
}

impl IneqParams {
    pub const DEFAULT_SAMPLES: usize = 200;
    pub const DEFAULT_DEGREE: usize = 8;

    pub fn resolve(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let beta = cfg.beta.unwrap_or(0.5);
        let gamma = cfg.gamma.unwrap_or(0.5);
        let id = cfg.suite.clone().unwrap_or_else(|| "all".into());
        let suites = if id.trim() == "all" {
            Suite::IDS
                .iter()
                .map(|s| Suite::parse(s, beta, gamma))
                .collect::<Result<Vec<_>>>()?
        } else {
            id.split(',')
                .map(|s| Suite::parse(s, beta, gamma))
                .collect::<Result<Vec<_>>>()?
        };
        let samples = cfg.samples.unwrap_or(Self::DEFAULT_SAMPLES);
        if samples < 1 {
            return Err(Error::config("samples", "need at least one sample"));
        }
        let degree = cfg.degree.unwrap_or(Self::DEFAULT_DEGREE);
        if degree < 1 {
            return Err(Error::config("degree", "must be >= 1"));
        }
        if let Some(q) = cfg.quad {
            if q < 4 * degree {
                return Err(Error::config(
                    "quad",
                    format!("need at least 4 * degree = {} nodes, got {q}", 4 * degree),
                ));
            }
        }
        Ok(Self {
            suites,
            samples,
            degree,
            quad: cfg.quad,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct RatioRow {
    sample: usize,
    ratio: f64,
}

/// Runs every requested suite.
pub fn ineq_reports(p: &IneqParams) -> Result<Vec<RatioReport>> {
    p.suites
        .iter()
        .map(|&s| inequalities::run_suite(s, p.samples, p.degree, p.seed, p.quad))
        .collect()
}

/// `ineq`: empirical ratios of the functional inequalities.
pub fn cmd_ineq(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let p = IneqParams::resolve(cfg, seed)?;
    let mut dir = ArtifactDir::create(out_dir(cfg, "ineq"))?;
    let reports = ineq_reports(&p)?;
    let mut violations = Vec::new();
    let mut summary = Vec::new();
    for r in &reports {
        let id = r.suite.id();
        dir.json(&format!("report_{id}.json"), r)?;
        let rows: Vec<RatioRow> = r
            .ratios
            .iter()
            .enumerate()
            .map(|(sample, &ratio)| RatioRow { sample, ratio })
            .collect();
        dir.csv(&format!("ratios_{id}.csv"), &rows)?;
        if let Some(i) = r.ratios.iter().position(|v| !v.is_finite()) {
            violations.push(format!("{id}: sample {i} has a non-finite ratio"));
        }
        summary.push(json!({
            "suite": id,
            "exponent": r.exponent,
            "max_ratio": r.max_ratio,
            "median_ratio": r.median_ratio,
            "refinement_delta": r.refinement_delta,
            "flagged": r.flagged.len(),
        }));
    }
    finish(
        "ineq",
        cfg,
        Some(seed),
        &p,
        dir,
        json!({ "suites": summary }),
        violations,
    )
}

/// Dispatches a subcommand by name.
pub fn run(subcommand: &str, cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    match subcommand {
        "correlation" => cmd_correlation(cfg),
        "mc" => cmd_mc(cfg, seed),
        "sweep" => cmd_sweep(cfg, seed),
        "verify-tensor" => cmd_verify_tensor(cfg, seed),
        "nash-profile" => cmd_nash_profile(cfg),
        "ineq" => cmd_ineq(cfg, seed),
        other => Err(Error::config(
            "subcommand",
            format!("unknown subcommand `{other}`"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, dir: &std::path::Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::parse(text).unwrap();
        c.out_dir = Some(dir.to_path_buf());
        c
    }

    #[test]
    fn invalid_alpha_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = cmd_correlation(&cfg("alpha = 1.5", dir.path())).unwrap_err();
        assert!(matches!(e, Error::InvalidConfig { field: "alpha", .. }));
        // nothing is computed or written before validation
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    #[test]
    fn small_correlation_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "grid = 16\ndt = 0.05\ntmax = 2\nkappa_list = 1e-2, 1e-3\nfit_start = 0.5",
            dir.path(),
        );
        let out = cmd_correlation(&c).unwrap();
        assert!(out.ok(), "{:?}", out.violations);
        for f in [
            "trace_kappa_1e-2.csv",
            "fit_kappa_1e-3.json",
            "summary.csv",
            "decay.svg",
            "manifest.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
        let manifest: Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["subcommand"], "correlation");
        assert_eq!(manifest["params"]["grid"], 16);
    }

    #[test]
    fn mc_seed_is_echoed_and_reproducible() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let text = "model = oriented_shear\ngrid = 16\ntmax = 0.2\ndt = 0.05\neps = 0.1\nrealizations = 3\nplot = false";
        let a = cmd_mc(&cfg(text, d1.path()), 11).unwrap();
        let b = cmd_mc(&cfg(text, d2.path()), 11).unwrap();
        assert_eq!(a.summary, b.summary);
        let read = |d: &std::path::Path| std::fs::read_to_string(d.join("energy.csv")).unwrap();
        assert_eq!(read(d1.path()), read(d2.path()));
        let manifest: Value = serde_json::from_str(
            &std::fs::read_to_string(d1.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["seed"], 11);
    }

    #[test]
    fn mc_rejects_a_non_dividing_step() {
        let dir = tempfile::tempdir().unwrap();
        let e = cmd_mc(
            &cfg(
                "model = oriented_shear\ngrid = 16\neps = 0.1\ndt = 0.03",
                dir.path(),
            ),
            1,
        )
        .unwrap_err();
        assert!(e.is_config(), "{e}");
    }

    #[test]
    fn ineq_suite_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_ineq(
            &cfg(
                "suite = nonradial_nash\nsamples = 5\ndegree = 2",
                dir.path(),
            ),
            3,
        )
        .unwrap();
        assert!(out.ok());
        assert!(dir.path().join("report_nonradial_nash.json").exists());
        assert!(dir.path().join("ratios_nonradial_nash.csv").exists());
    }

    #[test]
    fn rate_spread_is_symmetric() {
        assert_eq!(rate_spread(&[2.0]), 0.0);
        assert!((rate_spread(&[2.0, 2.2, 2.1]) - 0.1).abs() < 1e-12);
    }
}
