use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// A wavevector lies outside the spectral truncation.
    #[error("wavevector {k:?} outside truncation |k|_inf <= {kmax}")]
    OutsideTruncation { k: Vec<i64>, kmax: usize },

    /// The grid cannot represent the requested spectrum without aliasing.
    #[error("grid resolution {n} aliases modes up to {kmax}; need at least {required}")]
    Aliasing {
        n: usize,
        kmax: usize,
        required: usize,
    },

    /// Two objects that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The iterative linear solver hit its iteration cap.
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    /// The advection sub-stepping needed more sub-steps than allowed.
    #[error("CFL sub-step cap exceeded: needed {needed}, cap {cap}")]
    CflCapExceeded { needed: usize, cap: usize },

    /// A decay fit could not be performed on the given trace.
    #[error("decay fit failed: {0}")]
    Fit(String),

    /// Degenerate input that an operation cannot meaningfully handle.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A hard invariant (mean conservation, energy monotonicity) failed.
    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. } | Error::OutsideTruncation { .. } | Error::Aliasing { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
