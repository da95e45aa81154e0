//! Experiment configuration: a flat `key = value` text format plus the
//! precedence rule that command-line flags override file entries.
//!
//! ```text
//! # comments and blank lines are ignored
//! alpha = 0.5
//! kappa_list = 1e-2, 1e-3, 1e-4
//! model = oriented_shear
//! ```
//!
//! Keys accept `-` or `_` interchangeably. Unknown keys are errors, so a typo
//! never silently falls back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::FlowModel;
use crate::spectrum::CutoffProfile;

/// Every recognised key, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("alpha", "Hölder exponent in (0,1)"),
    ("eta", "cutoff scale >= 0"),
    ("rho", "cutoff profile: gaussian | exponential"),
    ("kmax", "spectral truncation radius >= 1"),
    ("kappa", "molecular diffusivity >= 0"),
    ("kappa_list", "comma-separated diffusivities (a sweep)"),
    ("grid", "grid points per axis"),
    ("dt", "time step > 0"),
    ("tmax", "final time > 0"),
    ("model", "flow model for mc / sweep"),
    ("eps", "correlation time of piecewise flows > 0"),
    ("realizations", "Monte Carlo realizations >= 2"),
    ("seed", "base seed (default: KRAICHNAN_SEED or built-in)"),
    ("beta", "tensor bound / Nash exponent in (0,1]"),
    ("beta_list", "comma-separated exponents for verify-tensor"),
    ("gamma", "nonradial weight exponent in [0,1)"),
    ("suite", "inequality suite id, or `all`"),
    ("samples", "inequality samples >= 1"),
    ("degree", "trigonometric degree of inequality samples"),
    ("quad", "quadrature nodes per axis"),
    ("directions", "probe directions for verify-tensor"),
    ("snapshots", "comma-separated snapshot times"),
    ("fit_start", "start of the decay fit window"),
    ("fit_end", "end of the decay fit window"),
    ("pde_grid", "grid of the correlation cross-check in mc"),
    (
        "tensor",
        "diffusion tensor for nash-profile: kraichnan | shear | identity",
    ),
    ("out_dir", "artifact directory"),
    ("plot", "write SVG plots: true | false"),
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub rho: Option<CutoffProfile>,
    pub kmax: Option<usize>,
    pub kappa: Option<f64>,
    pub kappa_list: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub dt: Option<f64>,
    pub tmax: Option<f64>,
    pub model: Option<FlowModel>,
    pub eps: Option<f64>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    pub beta_list: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub suite: Option<String>,
    pub samples: Option<usize>,
    pub degree: Option<usize>,
    pub quad: Option<usize>,
    pub directions: Option<usize>,
    pub snapshots: Option<Vec<f64>>,
    pub fit_start: Option<f64>,
    pub fit_end: Option<f64>,
    pub pde_grid: Option<usize>,
    pub tensor: Option<TensorKind>,
    pub out_dir: Option<PathBuf>,
    pub plot: Option<bool>,
}

/// Which diffusion tensor a profile run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    /// `2 kappa I + D(0) - D(x)` from the isotropic spectrum.
    Kraichnan,
    /// The diagonal tensor of the white shear model.
    Shear,
    /// `a = I`, the heat equation.
    Identity,
}

impl TensorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kraichnan" => Ok(Self::Kraichnan),
            "shear" => Ok(Self::Shear),
            "identity" | "heat" => Ok(Self::Identity),
            other => Err(Error::config(
                "tensor",
                format!("unknown tensor `{other}` (expected kraichnan|shear|identity)"),
            )),
        }
    }
}

fn num<T: std::str::FromStr>(field: &'static str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(field, format!("cannot parse `{}`", v.trim())))
}

fn list(field: &'static str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(field, s))
        .collect()
}

fn key_name(key: &str) -> Option<&'static str> {
    let k = key.trim().replace('-', "_").to_ascii_lowercase();
    let k = match k.as_str() {
        "n" | "n_grid" => "grid",
        "t" | "t_end" | "horizon" => "tmax",
        "n_realizations" => "realizations",
        other => {
            return KEYS
                .iter()
                .find(|(name, _)| *name == other)
                .map(|(n, _)| *n)
        }
    };
    Some(k)
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let Some(k) = key_name(key) else {
            return Err(Error::config(
                "config",
                format!("unknown key `{}`", key.trim()),
            ));
        };
        match k {
            "alpha" => self.alpha = Some(num("alpha", value)?),
            "eta" => self.eta = Some(num("eta", value)?),
            "rho" => self.rho = Some(CutoffProfile::parse(value)?),
            "kmax" => self.kmax = Some(num("kmax", value)?),
            "kappa" => self.kappa = Some(num("kappa", value)?),
            "kappa_list" => self.kappa_list = Some(list("kappa_list", value)?),
            "grid" => self.grid = Some(num("grid", value)?),
            "dt" => self.dt = Some(num("dt", value)?),
            "tmax" => self.tmax = Some(num("tmax", value)?),
            "model" => self.model = Some(FlowModel::parse(value)?),
            "eps" => self.eps = Some(num("eps", value)?),
            "realizations" => self.realizations = Some(num("realizations", value)?),
            "seed" => self.seed = Some(num("seed", value)?),
            "beta" => self.beta = Some(num("beta", value)?),
            "beta_list" => self.beta_list = Some(list("beta_list", value)?),
            "gamma" => self.gamma = Some(num("gamma", value)?),
            "suite" => self.suite = Some(value.trim().to_string()),
            "samples" => self.samples = Some(num("samples", value)?),
            "degree" => self.degree = Some(num("degree", value)?),
            "quad" => self.quad = Some(num("quad", value)?),
            "directions" => self.directions = Some(num("directions", value)?),
            "snapshots" => self.snapshots = Some(list("snapshots", value)?),
            "fit_start" => self.fit_start = Some(num("fit_start", value)?),
            "fit_end" => self.fit_end = Some(num("fit_end", value)?),
            "pde_grid" => self.pde_grid = Some(num("pde_grid", value)?),
            "tensor" => self.tensor = Some(TensorKind::parse(value)?),
            "out_dir" => self.out_dir = Some(PathBuf::from(value.trim())),
            "plot" => {
                self.plot = Some(match value.trim().to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" | "on" => true,
                    "false" | "no" | "0" | "off" => false,
                    other => {
                        return Err(Error::config(
                            "plot",
                            format!("expected true or false, got `{other}`"),
                        ))
                    }
                })
            }
            _ => unreachable!("every key in KEYS is handled"),
        }
        Ok(())
    }

    /// Parses the flat text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    "config",
                    format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
                ));
            };
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `self` with every value present in `over` replaced.
    pub fn overridden_by(self, over: ExperimentConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Self { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            alpha,
            eta,
            rho,
            kmax,
            kappa,
            kappa_list,
            grid,
            dt,
            tmax,
            model,
            eps,
            realizations,
            seed,
            beta,
            beta_list,
            gamma,
            suite,
            samples,
            degree,
            quad,
            directions,
            snapshots,
            fit_start,
            fit_end,
            pde_grid,
            tensor,
            out_dir,
            plot
        )
    }

    /// Renders back to the text format (round-trips through [`parse`](Self::parse)).
    pub fn to_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = v {
            for (k, val) in map {
                let s = match val {
                    serde_json::Value::Null => continue,
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(", "),
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                out.push_str(&format!("{k} = {s}\n"));
            }
        }
        out
    }

    /// The diffusivities requested: `kappa_list`, else `[kappa]`, else `default`.
    pub fn kappas(&self, default: &[f64]) -> Vec<f64> {
        match (&self.kappa_list, self.kappa) {
            (Some(list), _) => list.clone(),
            (None, Some(k)) => vec![k],
            (None, None) => default.to_vec(),
        }
    }
}

/// `Ok` when `v` lies in the open interval `(lo, hi)`.
pub fn check_open(field: &'static str, v: f64, lo: f64, hi: f64) -> Result<f64> {
    if v > lo && v < hi {
        Ok(v)
    } else {
        Err(Error::config(
            field,
            format!("must lie in ({lo},{hi}), got {v}"),
        ))
    }
}

pub fn check_positive(field: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(field, format!("must be > 0, got {v}")))
    }
}

pub fn check_nonnegative(field: &'static str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(field, format!("must be >= 0, got {v}")))
    }
}
