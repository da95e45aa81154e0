//! Empirical constants of weighted Poincaré and Nash-type inequalities on
//! `D = [-pi, pi]^2`, sampled over random trigonometric polynomials.
//!
//! Radial weights:
//!
//! ```text
//! ||g||_2 <= C || |x| grad g ||_2                                   (g mean-zero)
//! ||g||_2 <= C (|| |x|^beta grad g ||_2^a + ||g||_2^a) ||g||_1^(1-a),  a = d / (d + 2 - 2 beta)
//! ```
//!
//! Nonradial weights, with `W(g) = || |x|^gamma d_y g ||_2 + || |y|^gamma d_x g ||_2`:
//!
//! ```text
//! ||g||_2 <= C W(g)                                                 (g mean-zero)
//! ||g||_2 <= C W(g)^(1-a) ||g||_1^a,  a = (1 - gamma) / 2             (g mean-zero)
//! ```
//!
//! Every check returns the ratio of the left side to the right side without
//! `C`, so a bounded ratio over many samples is the numerical content.
//! Norms use the midpoint rule, which never places a node on the axes where
//! the weights vanish.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Dimension of every suite.
pub const DIM: usize = 2;

/// `a = d / (d + 2 - 2 beta)`.
pub fn nash_exponent_radial(d: usize, beta: f64) -> f64 {
    d as f64 / (d as f64 + 2.0 - 2.0 * beta)
}

/// `a = (1 - gamma) / 2`.
pub fn nash_exponent_nonradial(gamma: f64) -> f64 {
    (1.0 - gamma) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i64; 2],
    /// Coefficient of `cos(k . x)`.
    pub a: f64,
    /// Coefficient of `sin(k . x)`.
    pub b: f64,
}

/// `g(x) = c0 + sum_k a_k cos(k . x) + b_k sin(k . x)` over half-lattice `k`
/// with `|k|_inf <= degree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub degree: usize,
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

impl TestFunction {
    /// Standard normal coefficients scaled by `1 / (1 + |k|^2)`.
    pub fn random<R: Rng + ?Sized>(degree: usize, mean_zero: bool, rng: &mut R) -> Self {
        let q = degree as i64;
        let mut terms = Vec::new();
        for k0 in 0..=q {
            for k1 in -q..=q {
                if k0 == 0 && k1 <= 0 {
                    continue;
                }
                let s = 1.0 / (1.0 + (k0 * k0 + k1 * k1) as f64);
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                terms.push(TrigTerm {
                    k: [k0, k1],
                    a: a * s,
                    b: b * s,
                });
            }
        }
        let constant = if mean_zero {
            0.0
        } else {
            rng.sample(StandardNormal)
        };
        Self {
            degree,
            constant,
            terms,
        }
    }

    /// A single term `cos(k . x)`.
    pub fn cosine(k: [i64; 2]) -> Self {
        Self::from_terms(vec![TrigTerm { k, a: 1.0, b: 0.0 }], 0.0)
    }

    pub fn from_terms(terms: Vec<TrigTerm>, constant: f64) -> Self {
        let degree = terms
            .iter()
            .map(|t| t.k[0].unsigned_abs().max(t.k[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0);
        Self {
            degree,
            constant,
            terms,
        }
    }

    pub fn is_mean_zero(&self) -> bool {
        self.constant == 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|t| t.a == 0.0 && t.b == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            degree: self.degree,
            constant: c * self.constant,
            terms: self
                .terms
                .iter()
                .map(|t| TrigTerm {
                    k: t.k,
                    a: c * t.a,
                    b: c * t.b,
                })
                .collect(),
        }
    }

    /// `(g, d_x g, d_y g)` at `x`.
    pub fn eval(&self, x: &[f64; 2]) -> (f64, f64, f64) {
        let mut g = self.constant;
        let (mut gx, mut gy) = (0.0, 0.0);
        for t in &self.terms {
            let (s, c) = (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1]).sin_cos();
            g += t.a * c + t.b * s;
            let d = -t.a * s + t.b * c;
            gx += t.k[0] as f64 * d;
            gy += t.k[1] as f64 * d;
        }
        (g, gx, gy)
    }

    /// Values and derivatives at the `m x m` midpoint nodes, evaluated separably.
    fn sample(&self, m: usize) -> Samples {
        let h = 2.0 * PI / m as f64;
        let nodes: Vec<f64> = (0..m).map(|j| -PI + (j as f64 + 0.5) * h).collect();
        let q = self.degree;
        // cos / sin of k * node for k = 0..=q
        let table = |sign: f64| -> (Vec<f64>, Vec<f64>) {
            let mut c = vec![0.0; (q + 1) * m];
            let mut s = vec![0.0; (q + 1) * m];
            for k in 0..=q {
                for (j, x) in nodes.iter().enumerate() {
                    let (sv, cv) = (k as f64 * x).sin_cos();
                    c[k * m + j] = cv;
                    s[k * m + j] = sign * sv;
                }
            }
            (c, s)
        };
        let (c, s) = table(1.0);
        let len = m * m;
        let mut g = vec![self.constant; len];
        let mut gx = vec![0.0; len];
        let mut gy = vec![0.0; len];
        for t in &self.terms {
            let k0 = t.k[0] as usize;
            let k1 = t.k[1].unsigned_abs() as usize;
            let sg = t.k[1].signum() as f64;
            for i in 0..m {
                let (c0, s0) = (c[k0 * m + i], s[k0 * m + i]);
                for j in 0..m {
                    let (c1, s1) = (c[k1 * m + j], sg * s[k1 * m + j]);
                    let cv = c0 * c1 - s0 * s1;
                    let sv = s0 * c1 + c0 * s1;
                    let idx = i * m + j;
                    g[idx] += t.a * cv + t.b * sv;
                    let d = -t.a * sv + t.b * cv;
                    gx[idx] += t.k[0] as f64 * d;
                    gy[idx] += t.k[1] as f64 * d;
                }
            }
        }
        Samples {
            m,
            nodes,
            g,
            gx,
            gy,
        }
    }
}

struct Samples {
    m: usize,
    nodes: Vec<f64>,
    g: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl Samples {
    fn cell(&self) -> f64 {
        (2.0 * PI / self.m as f64).powi(2)
    }

    fn l2(&self) -> f64 {
        (self.cell() * self.g.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    fn l1(&self) -> f64 {
        self.cell() * self.g.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `|| |x|^p grad g ||_2`.
    fn radial_grad(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                let idx = i * self.m + j;
                let r2 = self.nodes[i].powi(2) + self.nodes[j].powi(2);
                acc += r2.powf(p) * (self.gx[idx].powi(2) + self.gy[idx].powi(2));
            }
        }
        (self.cell() * acc).sqrt()
    }

    /// `|| |x|^gamma d_y g ||_2 + || |y|^gamma d_x g ||_2`.
    fn mixed_grad(&self, gamma: f64) -> f64 {
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..self.m {
            let wx = self.nodes[i].abs().powf(2.0 * gamma);
            for j in 0..self.m {
                let idx = i * self.m + j;
                let wy = self.nodes[j].abs().powf(2.0 * gamma);
                a += wx * self.gy[idx].powi(2);
                b += wy * self.gx[idx].powi(2);
            }
        }
        (self.cell() * a).sqrt() + (self.cell() * b).sqrt()
    }
}

/// Which inequality a check evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "id")]
pub enum Suite {
    WeightedPoincare,
    WeightedNash { beta: f64 },
    NonradialPoincare { gamma: f64 },
    NonradialNash { gamma: f64 },
}

impl Suite {
    pub const IDS: [&'static str; 4] = [
        "weighted_poincare",
        "weighted_nash",
        "nonradial_poincare",
        "nonradial_nash",
    ];

    /// Suite from its id, with the exponent parameter used where relevant.
    pub fn parse(id: &str, beta: f64, gamma: f64) -> Result<Self> {
        let s = match id.trim().replace('-', "_").as_str() {
            "weighted_poincare" => Suite::WeightedPoincare,
            "weighted_nash" => Suite::WeightedNash { beta },
            "nonradial_poincare" => Suite::NonradialPoincare { gamma },
            "nonradial_nash" => Suite::NonradialNash { gamma },
            other => {
                return Err(Error::config(
                    "suite",
                    format!(
                        "unknown suite `{other}`; expected one of {}",
                        Self::IDS.join(", ")
                    ),
                ))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn id(&self) -> &'static str {
        match self {
            Suite::WeightedPoincare => "weighted_poincare",
            Suite::WeightedNash { .. } => "weighted_nash",
            Suite::NonradialPoincare { .. } => "nonradial_poincare",
            Suite::NonradialNash { .. } => "nonradial_nash",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Suite::WeightedNash { beta } if !(beta > 0.0 && beta < 1.0) => Err(Error::config(
                "beta",
                format!("must lie in (0,1), got {beta}"),
            )),
            Suite::NonradialPoincare { gamma } | Suite::NonradialNash { gamma }
                if !(0.0..1.0).contains(&gamma) =>
            {
                Err(Error::config(
                    "gamma",
                    format!("must lie in [0,1), got {gamma}"),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Interpolation exponent `a`, for the Nash-type suites.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Suite::WeightedNash { beta } => Some(nash_exponent_radial(DIM, beta)),
            Suite::NonradialNash { gamma } => Some(nash_exponent_nonradial(gamma)),
            _ => None,
        }
    }

    pub fn needs_mean_zero(&self) -> bool {
        !matches!(self, Suite::WeightedNash { .. })
    }
}

fn check_input(g: &TestFunction, quad: usize, mean_zero: bool) -> Result<()> {
    if g.is_zero() {
        return Err(Error::Degenerate("g is identically zero".into()));
    }
    if mean_zero && !g.is_mean_zero() {
        return Err(Error::Degenerate("g must have zero mean".into()));
    }
    if quad < 4 * g.degree.max(1) {
        return Err(Error::config(
            "quad",
            format!(
                "need at least 4 x degree = {} nodes per axis, got {quad}",
                4 * g.degree.max(1)
            ),
        ));
    }
    Ok(())
}

fn nonzero(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Degenerate(format!("{what} vanishes")))
    }
}

/// `||g||_2 / || |x| grad g ||_2`.
pub fn check_weighted_poincare(g: &TestFunction, quad: usize) -> Result<f64> {
    evaluate(Suite::WeightedPoincare, g, quad)
}

/// `||g||_2 / [(|| |x|^beta grad g ||_2^a + ||g||_2^a) ||g||_1^(1-a)]`.
pub fn check_weighted_nash(g: &TestFunction, beta: f64, quad: usize) -> Result<f64> {
    evaluate(Suite::WeightedNash { beta }, g, quad)
}

/// Nonradial Poincaré or Nash ratio, depending on `nash`.
pub fn check_nonradial(g: &TestFunction, gamma: f64, nash: bool, quad: usize) -> Result<f64> {
    let suite = if nash {
        Suite::NonradialNash { gamma }
    } else {
        Suite::NonradialPoincare { gamma }
    };
    evaluate(suite, g, quad)
}

/// Ratio of left side to right side for `suite`.
pub fn evaluate(suite: Suite, g: &TestFunction, quad: usize) -> Result<f64> {
    suite.validate()?;
    check_input(g, quad, suite.needs_mean_zero())?;
    let s = g.sample(quad);
    let l2 = nonzero(s.l2(), "||g||_2")?;
    let ratio = match suite {
        Suite::WeightedPoincare => l2 / nonzero(s.radial_grad(1.0), "|| |x| grad g ||")?,
        Suite::WeightedNash { beta } => {
            let a = nash_exponent_radial(DIM, beta);
            let w = s.radial_grad(beta);
            l2 / ((w.powf(a) + l2.powf(a)) * s.l1().powf(1.0 - a))
        }
        Suite::NonradialPoincare { gamma } => {
            l2 / nonzero(s.mixed_grad(gamma), "weighted gradient")?
        }
        Suite::NonradialNash { gamma } => {
            let a = nash_exponent_nonradial(gamma);
            let w = nonzero(s.mixed_grad(gamma), "weighted gradient")?;
            l2 / (w.powf(1.0 - a) * s.l1().powf(a))
        }
    };
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::Degenerate(format!(
            "ratio {ratio} is not finite and positive"
        )));
    }
    Ok(ratio)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub suite: Suite,
    pub samples: usize,
    pub degree: usize,
    pub quad: usize,
    pub seed: u64,
    pub exponent: Option<f64>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Relative change of `max_ratio` when the quadrature resolution doubles.
    pub refinement_delta: f64,
    /// Largest relative change of any single ratio under the same doubling.
    pub max_sample_delta: f64,
    /// Samples after the first 50 whose ratio exceeded ten times the running maximum.
    pub flagged: Vec<usize>,
    pub ratios: Vec<f64>,
}

/// Samples after which the ten-fold jump heuristic applies.
pub const FLAG_WARMUP: usize = 50;

/// Draws `n` random test functions and evaluates `suite` on each, at
/// resolution `quad` and `2 quad`.
pub fn run_suite(
    suite: Suite,
    n: usize,
    degree: usize,
    seed: u64,
    quad: Option<usize>,
) -> Result<RatioReport> {
    suite.validate()?;
    if n < 1 {
        return Err(Error::config("samples", "need at least one sample"));
    }
    if degree < 1 {
        return Err(Error::config("degree", "must be >= 1"));
    }
    let quad = quad.unwrap_or(8 * degree);
    let mean_zero = suite.needs_mean_zero();
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::seeded(rng::derive(seed, i as u64));
            let g = TestFunction::random(degree, mean_zero, &mut r);
            Ok((evaluate(suite, &g, quad)?, evaluate(suite, &g, 2 * quad)?))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fine_max = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let max_sample_delta = pairs
        .iter()
        .map(|(c, f)| (f - c).abs() / c)
        .fold(0.0, f64::max);
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median_ratio = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mut flagged = Vec::new();
    let mut running = 0.0f64;
    for (i, &r) in ratios.iter().enumerate() {
        if i >= FLAG_WARMUP && r > 10.0 * running {
            flagged.push(i);
        }
        running = running.max(r);
    }
    Ok(RatioReport {
        suite,
        samples: n,
        degree,
        quad,
        seed,
        exponent: suite.exponent(),
        max_ratio,
        median_ratio,
        refinement_delta: (fine_max - max_ratio).abs() / max_ratio,
        max_sample_delta,
        flagged,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exponent_identities() {
        assert_eq!(nash_exponent_radial(2, 0.5), 2.0 / 3.0);
        assert_eq!(nash_exponent_nonradial(0.5), 0.25);
        assert!((nash_exponent_radial(2, 1e-12) - 0.5).abs() < 1e-11);
    }

    #[test]
    fn separable_sampling_matches_direct_evaluation() {
        let g = TestFunction::random(3, false, &mut rng::seeded(4));
        let s = g.sample(8);
        for idx in [0, 9, 37, 63] {
            let (i, j) = (idx / 8, idx % 8);
            let (v, vx, vy) = g.eval(&[s.nodes[i], s.nodes[j]]);
            assert!((v - s.g[idx]).abs() < 1e-12);
            assert!((vx - s.gx[idx]).abs() < 1e-12 && (vy - s.gy[idx]).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_norms_are_exact() {
        let s = TestFunction::cosine([1, 0]).sample(16);
        assert!((s.l2() - (2.0 * PI * PI).sqrt()).abs() < 1e-12);
        // |cos| has kinks, so the midpoint rule is only second order here.
        let s = TestFunction::cosine([1, 0]).sample(64);
        assert!((s.l1() - 8.0 * PI).abs() < 0.02);
    }

    #[test]
    fn cosine_ratios_are_stable_under_doubling() {
        let g = TestFunction::cosine([1, 0]);
        for suite in [
            Suite::WeightedPoincare,
            Suite::WeightedNash { beta: 0.5 },
            Suite::NonradialPoincare { gamma: 0.0 },
            Suite::NonradialNash { gamma: 0.5 },
        ] {
            let c = evaluate(suite, &g, 64).unwrap();
            let f = evaluate(suite, &g, 128).unwrap();
            assert!((f - c).abs() / c < 0.01, "{suite:?}: {c} vs {f}");
        }
    }

    #[test]
    fn gamma_zero_is_the_unweighted_ratio() {
        // ||cos x||_2 / ||d_x cos x||_2 = 1
        let r = check_nonradial(&TestFunction::cosine([1, 0]), 0.0, false, 32).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let zero = TestFunction::from_terms(vec![], 0.0);
        assert!(check_weighted_poincare(&zero, 16).is_err());
        let constant = TestFunction::from_terms(vec![], 2.0);
        assert!(check_weighted_poincare(&constant, 16).is_err());
        let g = TestFunction::cosine([3, 1]);
        assert!(check_weighted_poincare(&g, 8).unwrap_err().is_config());
        assert!(check_weighted_nash(&g, 1.0, 16).unwrap_err().is_config());
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_suite(Suite::NonradialNash { gamma: 0.5 }, 5, 3, 11, None).unwrap();
        let b = run_suite(Suite::NonradialNash { gamma: 0.5 }, 5, 3, 11, None).unwrap();
        assert_eq!(a, b);
        let one = run_suite(Suite::WeightedPoincare, 1, 3, 2, None).unwrap();
        let g = TestFunction::random(3, true, &mut rng::seeded(rng::derive(2, 0)));
        assert_eq!(one.max_ratio, check_weighted_poincare(&g, 24).unwrap());
    }

    proptest! {
        #[test]
        fn ratios_are_scale_invariant(seed in 0u64..1000, lambda in prop_oneof![Just(2.0), Just(-3.0)]) {
            let g = TestFunction::random(4, true, &mut rng::seeded(seed));
            for suite in [
                Suite::WeightedPoincare,
                Suite::WeightedNash { beta: 0.3 },
                Suite::NonradialPoincare { gamma: 0.5 },
                Suite::NonradialNash { gamma: 0.5 },
            ] {
                let r = evaluate(suite, &g, 16).unwrap();
                let s = evaluate(suite, &g.scaled(lambda), 16).unwrap();
                prop_assert!((r - s).abs() <= 1e-12 * r);
            }
        }
    }
}
