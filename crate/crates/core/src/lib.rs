//! Numerical laboratory for the Kraichnan passive-scalar model.
//!
//! The crate covers the whole chain from the drift covariance spectrum to
//! dissipation diagnostics:
//!
//! * [`spectrum`]: covariance spectra and Gaussian field synthesis on `T^d`;
//! * [`tensor`]: the effective diffusion tensor `a(x) = 2 kappa I + D(0) - D(x)`
//!   and empirical lower bounds on it;
//! * [`correlation`]: the closed equation `d_t g = div(a grad g)` for the
//!   two-point correlation, solved implicitly, with decay fits;
//! * [`flows`]: piecewise-constant-in-time drifts (smooth modes, shears,
//!   white-in-time samplers);
//! * [`transport`]: pseudo-spectral advection-diffusion and Monte Carlo
//!   ensembles;
//! * [`inequalities`]: property suites for the weighted Poincare and Nash
//!   type inequalities behind the decay estimates;
//! * [`experiments`]: the orchestration used by the `kraichnan` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod correlation;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod flows;
pub mod grid;
pub mod inequalities;
pub mod linalg;
pub mod output;
pub mod rng;
pub mod spectrum;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Grid, GridField, VectorField};
pub use linalg::SymMatrix;
pub use spectrum::{CutoffProfile, ShearSpectrum, SpectrumConfig};
