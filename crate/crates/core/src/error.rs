use thiserror::Error;

use crate::grid::Rep;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("representation mismatch: expected {expected:?}, found {found:?}")]
    RepMismatch { expected: Rep, found: Rep },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("support touches the light cone at tau={tau}, |xi|={xi}")]
    ConeContact { tau: f64, xi: f64 },
    #[error("unbounded kernel family: {0}")]
    UnboundedKernel(String),
    #[error("dimension {dim} unsupported: {reason}")]
    UnsupportedDimension { dim: usize, reason: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),
    #[error("precondition rejected: {0}")]
    Precondition(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
