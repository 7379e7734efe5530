use thiserror::Error;

/// Errors produced by the numerical kernels and the data pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {t} outside domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("recurrence degenerate at order {order}: {detail}")]
    Degenerate { order: usize, detail: String },

    #[error("continuation failed at t = {at}: {detail}")]
    Continuation { at: f64, detail: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error on line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("data error on line {line}: {detail}")]
    Data { line: usize, detail: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
