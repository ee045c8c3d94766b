//! Error type shared by every stage.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension (m={m}, n={n}): need m,n >= 3 and m+n >= 8")]
    UnsupportedDimension { m: usize, n: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration failed at s={s}: {reason}")]
    Integration { s: f64, reason: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("linear solver: {0}")]
    Solver(String),

    #[error("diagnostic violation: {0}")]
    Diagnostic(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("precondition: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
