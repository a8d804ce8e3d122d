use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NonHermitian { residual: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no sign change of f on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid scenario file: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
