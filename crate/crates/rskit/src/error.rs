//! Error type shared by every module in the crate.

use thiserror::Error;

/// Unified error for construction, validation, and solver failures.
#[derive(Debug, Error)]
pub enum RsError {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Array shapes or dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Input data failed a content check (non-finite entries, bad weights, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested combination is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative routine stopped without meeting its tolerance.
    #[error("no convergence in {what}: residual {residual:e}")]
    Convergence { what: String, residual: f64 },

    /// Caller-supplied quantities contradict each other.
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, RsError>;

impl RsError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        RsError::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        RsError::ShapeMismatch(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        RsError::Validation(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        RsError::Unsupported(msg.into())
    }
}
