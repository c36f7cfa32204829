use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the laboratory's numerical routines.
#[derive(Debug, Error)]
pub enum GftError {
    /// The caller supplied arguments outside an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// A mathematical precondition failed (e.g. `f(0) != 0` for an inner series).
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative method failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A quantity that must be nonzero vanished at a sampled point.
    #[error("singularity at z = {}{:+}i: {what}", .at.re, .at.im)]
    Singularity { at: Complex64, what: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GftError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(GftError::Usage(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GftError::Domain(msg.into()))
}
