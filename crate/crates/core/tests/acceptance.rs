//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and
//! exits non-zero when any criterion fails.
//!
//! `KRAICHNAN_ACCEPTANCE=1,3,8` restricts the run to the listed criteria;
//! criterion 7 then covers only the runs that were executed.

use std::process::ExitCode;
use std::time::Instant;

use kraichnan::config::ExperimentConfig;
use kraichnan::correlation::{self, CorrelationRun, DiffusionOperator};
use kraichnan::experiments::{
    self, cross_check, initial_correlation, initial_scalar, predicted_energy, rate_spread,
    CorrelationParams, McParams, TensorParams, CROSSCHECK_DT, MEAN_TOLERANCE, MONOTONE_TOLERANCE,
};
use kraichnan::flows::{sine_shear, PiecewiseFlow};
use kraichnan::inequalities::{self, nash_exponent_nonradial, nash_exponent_radial, Suite};
use kraichnan::tensor::{self, TensorField};
use kraichnan::transport::{self, EnsembleStats, SweepRow};
use kraichnan::{rng, Grid, GridField, SpectrumConfig, SymMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

const SEED: u64 = 20_240_601;

type Check = Result<(bool, String), String>;

/// Invariant bookkeeping shared by every run of the suite.
#[derive(Default)]
struct Invariants {
    runs: usize,
    worst_mean: f64,
    worst_increase: f64,
    failures: Vec<String>,
}

impl Invariants {
    fn correlation(&mut self, label: &str, run: &CorrelationRun, g0: &GridField) {
        self.runs += 1;
        let mean = run.mean_drift / g0.linf_norm();
        let inc = run.max_l2_increase / g0.l2_norm();
        self.worst_mean = self.worst_mean.max(mean);
        self.worst_increase = self.worst_increase.max(inc);
        if mean > MEAN_TOLERANCE {
            self.failures
                .push(format!("{label}: mean drift {mean:.2e}"));
        }
        if inc > MONOTONE_TOLERANCE {
            self.failures
                .push(format!("{label}: ||g|| increase {inc:.2e}"));
        }
    }

    fn ensemble(&mut self, label: &str, kappa: f64, mean_drift: f64, max_rel_increase: f64) {
        self.runs += 1;
        self.worst_mean = self.worst_mean.max(mean_drift);
        if mean_drift > MEAN_TOLERANCE {
            self.failures
                .push(format!("{label}: scalar mean drift {mean_drift:.2e}"));
        }
        if kappa > 0.0 {
            self.worst_increase = self.worst_increase.max(max_rel_increase);
            if max_rel_increase > MONOTONE_TOLERANCE {
                self.failures.push(format!(
                    "{label}: ||theta|| increase {max_rel_increase:.2e}"
                ));
            }
        }
    }

    fn stats(&mut self, label: &str, kappa: f64, s: &EnsembleStats) {
        self.ensemble(label, kappa, s.max_mean_drift, s.max_relative_increase);
    }

    fn sweep(&mut self, label: &str, rows: &[SweepRow]) {
        for r in rows {
            self.ensemble(
                &format!("{label} kappa={}", r.kappa),
                r.kappa,
                r.max_mean_drift,
                r.max_relative_increase,
            );
        }
    }
}

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).expect("acceptance configs are valid")
}

fn err(e: kraichnan::Error) -> String {
    e.to_string()
}

/// Kappa-uniform exponential decay of g(t, 0).
fn criterion_1(inv: &mut Invariants) -> Check {
    let p = CorrelationParams::resolve(&cfg(
        "alpha = 0.5\neta = 0\ngrid = 128\nkappa_list = 1e-2, 1e-3, 1e-4\ndt = 1e-2\ntmax = 20\nfit_start = 2\nfit_end = 20",
    ))
    .map_err(err)?;
    let cases = experiments::correlation_cases(&p).map_err(err)?;
    let g0 = initial_correlation(Grid::square(p.grid));
    for c in &cases {
        inv.correlation(&format!("correlation kappa={}", c.kappa), &c.run, &g0);
    }
    let rates: Vec<f64> = cases.iter().map(|c| c.fit.rate).collect();
    let spread = rate_spread(&rates);
    let desc: Vec<String> = cases
        .iter()
        .map(|c| format!("kappa={:e}: {:.4}", c.kappa, c.fit.rate))
        .collect();
    Ok((
        spread <= 0.2,
        format!(
            "rates on [2,20] {}; max pairwise spread {:.2}% (limit 20%)",
            desc.join(", "),
            100.0 * spread
        ),
    ))
}

/// White-in-time ensemble against the correlation equation.
fn criterion_2(inv: &mut Invariants) -> Check {
    let p = McParams::resolve(
        &cfg("model = white_kraichnan\ngrid = 64\nkappa = 1e-3\nrealizations = 64\ntmax = 4\ndt = 0.01"),
        SEED,
        &[],
    )
    .map_err(err)?;
    let theta0 = initial_scalar(p.spec.params.grid());
    let stats = transport::mc_energy(&p.spec, &theta0, SEED).map_err(err)?;
    inv.stats("white_kraichnan ensemble", p.spec.kappa, &stats);
    let a = p
        .limit_tensor(p.spec.kappa)
        .map_err(err)?
        .expect("white model has a limit tensor");
    let rows =
        cross_check(&stats, &a, p.spec.t_end, CROSSCHECK_DT, &[1.0, 2.0, 4.0]).map_err(err)?;
    let pass = rows.iter().all(|r| r.z.abs() <= 3.0);
    let desc: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "t={}: mc {:.4}+-{:.4} pde {:.4} (z={:.1})",
                r.t, r.mc_energy, r.stderr, r.pde_energy, r.z
            )
        })
        .collect();
    Ok((
        pass,
        format!("kmax={} {}", p.spec.params.kmax, desc.join("; ")),
    ))
}

/// Lower bound on the tensor, its kmax refinement and the eta scaling.
fn criterion_3() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for eta in [0.0, 0.1] {
        let p = TensorParams::resolve(
            &cfg(&format!(
                "alpha = 0.5\neta = {eta}\nkappa = 0\nkmax = 64\nbeta = 0.5"
            )),
            SEED,
        )
        .map_err(err)?;
        let (base, refined) = experiments::tensor_reports(&p).map_err(err)?.remove(0);
        let delta = base.refinement_delta.unwrap_or(f64::INFINITY);
        let ok = base.empirical_c > 0.0 && delta < 0.05;
        pass &= ok;
        parts.push(format!(
            "eta={eta}: c={:.4} -> {:.4} at 2 kmax on n={} (delta {:.1}%, argmin |x|={:.3})",
            base.empirical_c,
            refined.empirical_c,
            p.grid,
            100.0 * delta,
            base.argmin_radius
        ));
        if eta == 0.0 && !ok {
            // the same doubling with the grid refined alongside kmax
            let fine = tensor::assemble_tensor(
                &SpectrumConfig::new(2, 0.5, 0.0, 128).map_err(err)?,
                0.0,
                513,
            )
            .map_err(err)?;
            let r = tensor::verify_lower_bound(&fine, 0.5, 64, SEED).map_err(err)?;
            parts.push(format!(
                "(with the grid doubled too: c={:.4}, delta {:.1}%)",
                r.empirical_c,
                100.0 * (r.empirical_c - base.empirical_c).abs() / base.empirical_c
            ));
        }
    }
    let p = TensorParams::resolve(&cfg("alpha = 0.5\nkappa = 0\nkmax = 64"), SEED).map_err(err)?;
    let rows = experiments::eta_table(&p, &[0.1, 0.05]).map_err(err)?;
    let factor = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => a.max(b) / a.min(b),
        _ => f64::INFINITY,
    };
    let inner = factor(rows[0].inner_scaled, rows[1].inner_scaled);
    let outer = factor(rows[0].outer, rows[1].outer);
    pass &= inner <= 4.0 && outer <= 4.0;
    parts.push(format!(
        "eta 0.1 vs 0.05: inner eta^(2-2a) min|x|^-2 {:.3} / {:.3} (x{inner:.2}), outer {:.3} / {:.3} (x{outer:.2})",
        rows[0].inner_scaled.unwrap_or(f64::NAN),
        rows[1].inner_scaled.unwrap_or(f64::NAN),
        rows[0].outer.unwrap_or(f64::NAN),
        rows[1].outer.unwrap_or(f64::NAN),
    ));
    Ok((pass, parts.join("; ")))
}

fn sweep(model: &str, kappas: &str, inv: &mut Invariants) -> Result<(Vec<SweepRow>, f64), String> {
    let p = McParams::resolve(
        &cfg(&format!(
            "model = {model}\ngrid = 64\neps = 0.1\ntmax = 4\ndt = 0.01\nrealizations = 32\nkappa_list = {kappas}"
        )),
        SEED,
        &[],
    )
    .map_err(err)?;
    let res = experiments::run_sweep(&p).map_err(err)?;
    inv.sweep(model, &res.rows);
    Ok((res.rows, res.initial_energy))
}

fn describe(rows: &[SweepRow], e0: f64) -> String {
    rows.iter()
        .map(|r| {
            format!(
                "kappa={:e}: {:.4}+-{:.4}",
                r.kappa,
                r.relative,
                r.stderr / e0
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Dissipation vanishes with kappa for the correlated models.
fn criterion_4(inv: &mut Invariants) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in ["oriented_shear", "bounded_shear_drift"] {
        let (rows, e0) = sweep(model, "1e-2, 1e-3, 1e-4", inv)?;
        let d: Vec<f64> = rows.iter().map(|r| r.dissipated).collect();
        let decreasing = d.windows(2).all(|w| w[1] < w[0]);
        let ratio = d[2] / d[0];
        pass &= decreasing && ratio < 0.25;
        parts.push(format!(
            "{model}: dissipated fraction {} (strictly decreasing: {decreasing}, kappa=1e-4 / kappa=1e-2 = {:.1}%)",
            describe(&rows, e0),
            100.0 * ratio
        ));
    }
    Ok((pass, parts.join("; ")))
}

/// Dissipation persists as kappa decreases for the white-in-time models.
fn criterion_5(inv: &mut Invariants) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in ["white_kraichnan", "white_shear"] {
        let (rows, e0) = sweep(model, "1e-2, 1e-3, 1e-4, 0", inv)?;
        let floor = rows[3].dissipated.max(0.0);
        let pos = &rows[..3];
        let half = pos.iter().all(|r| r.dissipated > 0.5 * e0);
        let above_floor = pos.iter().all(|r| r.dissipated >= 100.0 * floor);
        pass &= half && above_floor;
        let min_over_floor = pos
            .iter()
            .map(|r| r.dissipated / floor)
            .fold(f64::INFINITY, f64::min);
        parts.push(format!(
            "{model}: dissipated fraction {} (all > 50%: {half}; smallest / kappa=0 floor = {:.1}x)",
            describe(&rows, e0),
            min_over_floor
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn heat_rate(inv: &mut Invariants) -> Result<f64, String> {
    let grid = Grid::square(64);
    let a = TensorField::constant(grid, SymMatrix::identity(2)).map_err(err)?;
    let g0 = GridField::from_fn(grid, |x| x[0].cos());
    let run = correlation::solve(&g0, &a, 2.0, 1e-3, &[]).map_err(err)?;
    inv.correlation("heat", &run, &g0);
    Ok(correlation::fit_decay_window(&run.g_at_origin(), 0.5, 2.0)
        .map_err(err)?
        .rate)
}

fn characteristics_error(inv: &mut Invariants) -> Result<f64, String> {
    let grid = Grid::square(256);
    let theta0 = initial_scalar(grid);
    let flow = PiecewiseFlow::steady(sine_shear(grid, 1.0).map_err(err)?, 0.5, 1.0).map_err(err)?;
    let run = transport::advect_diffuse(&theta0, &flow, 0.0, 1.0, 0.01, &[1.0]).map_err(err)?;
    inv.ensemble(
        "characteristics",
        0.0,
        run.mean_drift,
        run.max_relative_increase,
    );
    let exact = GridField::from_fn(grid, |x| (x[0] - x[1].sin()).cos());
    Ok(run.snapshots[0].theta.max_abs_diff(&exact))
}

/// Slowest decay rate of the n = 16 operator from a dense eigensolve, and the
/// rate the time stepper produces.
fn eigen_oracle(inv: &mut Invariants) -> Result<(f64, f64), String> {
    let n = 16;
    let a = tensor::assemble_tensor(&SpectrumConfig::new(2, 0.5, 0.0, 7).map_err(err)?, 1e-2, n)
        .map_err(err)?;
    let op = DiffusionOperator::new(&a).map_err(err)?;
    let len = n * n;
    let dense = DMatrix::from_fn(len, len, |i, j| -op.entry(i, j));
    let mut eig: Vec<f64> = SymmetricEigen::new(dense)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    let lambda = eig[1];
    let next = eig
        .iter()
        .copied()
        .find(|&v| v > lambda * (1.0 + 1e-6))
        .unwrap_or(2.0 * lambda);
    // a generic mean-free start overlaps every mode
    let mut r = rng::seeded(SEED);
    let values: Vec<f64> = (0..len).map(|_| r.random::<f64>() - 0.5).collect();
    let mut g0 = GridField::from_values(Grid::square(n), values).map_err(err)?;
    let m = g0.mean();
    g0.values_mut().iter_mut().for_each(|v| *v -= m);
    let t_lo = (12.0 / (next - lambda)).max(1.0);
    let t_hi = t_lo + 4.0 / lambda;
    let dt = 1e-3;
    let run = correlation::solve(&g0, &a, t_hi, dt, &[]).map_err(err)?;
    inv.correlation("eigen oracle", &run, &g0);
    let fit = correlation::fit_decay_window(&run.l2(), t_lo, t_hi).map_err(err)?;
    Ok((fit.rate, lambda))
}

fn criterion_6(inv: &mut Invariants) -> Check {
    let heat = heat_rate(inv)?;
    let heat_ok = (heat - 1.0).abs() < 0.01;
    let char_err = characteristics_error(inv)?;
    let char_ok = char_err < 1e-3;
    let (rate, lambda) = eigen_oracle(inv)?;
    let rel = (rate - lambda).abs() / lambda;
    let eig_ok = rel < 0.02;
    Ok((
        heat_ok && char_ok && eig_ok,
        format!(
            "heat rate {heat:.5} (analytic 1, {:.3}%); shear characteristics max error {char_err:.2e} at n=256; \
             n=16 solver rate {rate:.5} vs dense eigenvalue {lambda:.5} ({:.3}%)",
            100.0 * (heat - 1.0).abs(),
            100.0 * rel
        ),
    ))
}

fn criterion_7(inv: &Invariants) -> Check {
    Ok((
        inv.failures.is_empty() && inv.runs > 0,
        format!(
            "{} runs checked; worst relative mean drift {:.1e} (limit {MEAN_TOLERANCE:.0e}); worst relative norm increase {:.1e} (limit {MONOTONE_TOLERANCE:.0e}){}",
            inv.runs,
            inv.worst_mean,
            inv.worst_increase,
            if inv.failures.is_empty() { String::new() } else { format!("; failures: {}", inv.failures.join(", ")) }
        ),
    ))
}

fn criterion_8() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for id in Suite::IDS {
        let suite = Suite::parse(id, 0.5, 0.5).map_err(err)?;
        let r = inequalities::run_suite(suite, 200, 8, SEED, None).map_err(err)?;
        let finite = r.ratios.iter().all(|v| v.is_finite()) && r.max_ratio.is_finite();
        let stable = r.refinement_delta < 0.05;
        pass &= finite && stable;
        parts.push(format!(
            "{id}: max {:.4}, doubling delta {:.1e}",
            r.max_ratio, r.refinement_delta
        ));
    }
    let mut exact = true;
    for beta in [0.25, 0.5, 0.75, 0.9] {
        exact &= nash_exponent_radial(2, beta) == 2.0 / (2.0 + 2.0 - 2.0 * beta);
    }
    for gamma in [0.0, 0.25, 0.5, 0.75] {
        exact &= nash_exponent_nonradial(gamma) == (1.0 - gamma) / 2.0;
    }
    exact &= Suite::parse("weighted_nash", 0.5, 0.0)
        .map_err(err)?
        .exponent()
        == Some(2.0 / 3.0)
        && Suite::parse("nonradial_nash", 0.5, 0.5)
            .map_err(err)?
            .exponent()
            == Some(0.25);
    pass &= exact;
    parts.push(format!("exponent identities exact: {exact}"));
    Ok((pass, parts.join("; ")))
}

/// Correlated shear ensembles approach the white limit as eps shrinks.
fn criterion_9(inv: &mut Invariants) -> Check {
    let mut gaps = Vec::new();
    let mut parts = Vec::new();
    let mut prediction = None;
    for eps in [0.2, 0.1, 0.05] {
        let p = McParams::resolve(
            &cfg(&format!("model = oriented_shear\ngrid = 64\nkappa = 1e-3\neps = {eps}\ntmax = 4\ndt = 0.01\nrealizations = 32")),
            SEED,
            &[],
        )
        .map_err(err)?;
        let theta0 = initial_scalar(p.spec.params.grid());
        let stats = transport::mc_energy(&p.spec, &theta0, SEED).map_err(err)?;
        inv.stats(&format!("oriented_shear eps={eps}"), p.spec.kappa, &stats);
        if prediction.is_none() {
            let a = p
                .limit_tensor(p.spec.kappa)
                .map_err(err)?
                .expect("shear limit tensor");
            prediction = Some(
                predicted_energy(&a, p.spec.t_end, CROSSCHECK_DT, &[p.spec.t_end]).map_err(err)?[0],
            );
        }
        let pred = prediction.expect("set above");
        let gap = (stats.final_mean() - pred).abs();
        parts.push(format!(
            "eps={eps}: mc {:.4}+-{:.4}, |mc - pde| {gap:.4}",
            stats.final_mean(),
            stats.final_stderr()
        ));
        gaps.push(gap);
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok((
        monotone,
        format!(
            "pde {:.4}; {}",
            prediction.unwrap_or(f64::NAN),
            parts.join("; ")
        ),
    ))
}

type Criterion = fn(&mut Invariants) -> Check;

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("KRAICHNAN_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |i: u32| only.as_ref().is_none_or(|l| l.contains(&i));
    let mut inv = Invariants::default();
    let mut lines: Vec<(u32, String, bool)> = Vec::new();
    let mut record = |i: u32, name: &str, result: Check, secs: f64| {
        let (pass, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
        let line = format!(
            "{} {i} {name}: {detail} [{secs:.0}s]",
            if pass { "PASS" } else { "FAIL" }
        );
        eprintln!("{line}");
        lines.push((i, line, pass));
    };
    let criteria: [(u32, &str, Criterion); 8] = [
        (1, "kappa-uniform decay", criterion_1),
        (2, "ensemble vs correlation equation", criterion_2),
        (3, "tensor lower bound", |_| criterion_3()),
        (4, "no anomaly for correlated flows", criterion_4),
        (5, "anomaly for white-in-time flows", criterion_5),
        (6, "solver oracles", criterion_6),
        (8, "inequality suites", |_| criterion_8()),
        (9, "Wong-Zakai trend", criterion_9),
    ];
    for (i, name, f) in criteria {
        if wanted(i) {
            let t0 = Instant::now();
            let r = f(&mut inv);
            record(i, name, r, t0.elapsed().as_secs_f64());
        }
    }
    if wanted(7) {
        record(7, "conservation and dissipation", criterion_7(&inv), 0.0);
    }
    lines.sort_by_key(|l| l.0);
    println!();
    for (_, line, _) in &lines {
        println!("{line}");
    }
    if lines.iter().all(|l| l.2) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
