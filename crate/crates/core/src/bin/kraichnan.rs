//! Command-line front end. All work happens in `kraichnan::experiments`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kraichnan::config::{ExperimentConfig, KEYS};
use kraichnan::experiments;
use kraichnan::{rng, Error};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "kraichnan",
    version,
    about = "Numerical laboratory for the Kraichnan passive-scalar model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay of the two-point correlation g(t, 0) from the correlation equation.
    Correlation(Flags),
    /// Monte Carlo energy of a transported scalar for one flow model.
    Mc(Flags),
    /// Empirical lower bounds on the diffusion tensor.
    VerifyTensor(Flags),
    /// Small-time decay of ||g(t)||_2 from a point mass.
    NashProfile(Flags),
    /// Ratios of the weighted Poincare and Nash type inequalities.
    Ineq(Flags),
    /// Dissipated energy across a list of diffusivities.
    Sweep(Flags),
    /// List the configuration keys.
    Keys,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Correlation(_) => "correlation",
            Command::Mc(_) => "mc",
            Command::VerifyTensor(_) => "verify-tensor",
            Command::NashProfile(_) => "nash-profile",
            Command::Ineq(_) => "ineq",
            Command::Sweep(_) => "sweep",
            Command::Keys => "keys",
        }
    }
}

/// Flags shared by every subcommand. Values are parsed by the same code as
/// the config file, so both report errors identically.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Worker threads for realizations, sweeps and samples.
    #[arg(long, short = 'j')]
    jobs: Option<usize>,
    /// Extra `key=value` settings, for keys without a dedicated flag.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    kmax: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    /// Comma-separated diffusivities.
    #[arg(long)]
    kappa_list: Option<String>,
    /// Grid points per axis.
    #[arg(long, short = 'n')]
    grid: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long, short = 't')]
    tmax: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    /// Base seed; defaults to KRAICHNAN_SEED, then a built-in value.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    beta_list: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    degree: Option<String>,
    #[arg(long)]
    quad: Option<String>,
    #[arg(long)]
    directions: Option<String>,
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    fit_start: Option<String>,
    #[arg(long)]
    fit_end: Option<String>,
    #[arg(long)]
    pde_grid: Option<String>,
    #[arg(long)]
    tensor: Option<String>,
    #[arg(long, short = 'o')]
    out_dir: Option<String>,
    #[arg(long)]
    plot: Option<String>,
}

impl Flags {
    fn overrides(&self) -> kraichnan::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::InvalidConfig {
                field: "set",
                reason: format!("expected KEY=VALUE, got `{kv}`"),
            })?;
            cfg.set(k, v)?;
        }
        let named = [
            ("alpha", &self.alpha),
            ("eta", &self.eta),
            ("rho", &self.rho),
            ("kmax", &self.kmax),
            ("kappa", &self.kappa),
            ("kappa_list", &self.kappa_list),
            ("grid", &self.grid),
            ("dt", &self.dt),
            ("tmax", &self.tmax),
            ("model", &self.model),
            ("eps", &self.eps),
            ("realizations", &self.realizations),
            ("seed", &self.seed),
            ("beta", &self.beta),
            ("beta_list", &self.beta_list),
            ("gamma", &self.gamma),
            ("suite", &self.suite),
            ("samples", &self.samples),
            ("degree", &self.degree),
            ("quad", &self.quad),
            ("directions", &self.directions),
            ("snapshots", &self.snapshots),
            ("fit_start", &self.fit_start),
            ("fit_end", &self.fit_end),
            ("pde_grid", &self.pde_grid),
            ("tensor", &self.tensor),
            ("out_dir", &self.out_dir),
            ("plot", &self.plot),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }

    fn resolve(&self) -> kraichnan::Result<(ExperimentConfig, u64)> {
        let file = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let mut cfg = file.overridden_by(self.overrides()?);
        let seed = match cfg.seed {
            Some(s) => s,
            None => rng::seed_from_env()?,
        };
        cfg.seed = Some(seed);
        Ok((cfg, seed))
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::InvalidConfig { .. } => "invalid_config",
        Error::OutsideTruncation { .. } => "outside_truncation",
        Error::Aliasing { .. } => "aliasing",
        Error::GridMismatch(_) => "grid_mismatch",
        Error::SolverDivergence { .. } => "solver_divergence",
        Error::CflCapExceeded { .. } => "cfl_cap_exceeded",
        Error::Fit(_) => "fit",
        Error::Degenerate(_) => "degenerate",
        Error::InvariantViolated(_) => "invariant_violated",
        Error::Unsupported(_) => "unsupported",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    };
    let field = match e {
        Error::InvalidConfig { field, .. } => Some(*field),
        Error::OutsideTruncation { .. } | Error::Aliasing { .. } => Some("kmax"),
        _ => None,
    };
    json!({ "error": kind, "field": field, "message": e.to_string() })
}

fn fail(subcommand: &str, e: &Error) -> ExitCode {
    let mut body = error_json(e);
    body["subcommand"] = json!(subcommand);
    eprintln!("{body}");
    ExitCode::from(if e.is_config() { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let flags = match &cli.command {
        Command::Keys => {
            for (k, doc) in KEYS {
                println!("{k:<14} {doc}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Correlation(f)
        | Command::Mc(f)
        | Command::VerifyTensor(f)
        | Command::NashProfile(f)
        | Command::Ineq(f)
        | Command::Sweep(f) => f,
    };
    let (cfg, seed) = match flags.resolve() {
        Ok(v) => v,
        Err(e) => return fail(name, &e),
    };
    if let Some(jobs) = flags.jobs {
        if jobs == 0 {
            return fail(
                name,
                &Error::InvalidConfig {
                    field: "jobs",
                    reason: "must be >= 1".into(),
                },
            );
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            return fail(name, &Error::Unsupported(format!("thread pool: {e}")));
        }
    }
    match experiments::run(name, &cfg, seed) {
        Ok(out) => {
            println!("{}", serde_json::to_string(&out).unwrap_or_default());
            if out.ok() {
                ExitCode::SUCCESS
            } else {
                fail(name, &Error::InvariantViolated(out.violations.join("; ")))
            }
        }
        Err(e) => fail(name, &e),
    }
}
