use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution, dataset or matrix failed an invariant check.
    #[error("validation error: {0}")]
    Validation(String),

    /// KL divergence with p(x) > 0 but q(x) = 0.
    #[error("absolute continuity violated at index {index}: p = {p}, q = 0")]
    AbsoluteContinuity { index: usize, p: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("value out of range: {0}")]
    Range(String),

    /// Correlation or similarity is undefined for the given input.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
