use thiserror::Error;

/// Errors raised by kernel construction, synthesis, and estimation.
///
/// Numeric payloads are carried as `f64` so the error type stays independent
/// of the scalar parameter.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{block} is ill-conditioned: condition estimate {cond:.3e} exceeds threshold {threshold:.3e}")]
    IllConditioned {
        block: &'static str,
        cond: f64,
        threshold: f64,
    },

    #[error("debiasing undefined: eigenvalue {eigenvalue} is within {epsilon} of 1 (kernel indistinguishable from identity)")]
    DebiasUndefined { eigenvalue: f64, epsilon: f64 },

    #[error("Schur complement has eigenvalue {eigenvalue:.3e} below the -1e-6 roundoff band; input violates the positive semidefinite model")]
    SchurIndefinite { eigenvalue: f64 },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable code, used by the sweep harness when a trial
    /// fails and is recorded instead of aborting the run.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Config(_) => "config_error",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::DebiasUndefined { .. } => "debias_undefined",
            Error::SchurIndefinite { .. } => "schur_indefinite",
            Error::Domain(_) => "domain_error",
        }
    }
}
