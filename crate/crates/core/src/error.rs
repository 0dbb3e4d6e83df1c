use thiserror::Error;

/// Errors raised by the factorisation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mode {mode} out of range for tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("mode {0} appears more than once")]
    RepeatedMode(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A dual variable left the domain `u < lambda` of the semi-unbalanced conjugate.
    #[error("dual variable {value} at index {index} is not below lambda = {lambda}")]
    DomainViolation { index: usize, value: f64, lambda: f64 },

    #[error("measure has no positive mass")]
    ZeroMass,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("marginal masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
