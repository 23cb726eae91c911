use std::path::PathBuf;

use thiserror::Error;

use crate::space::Vector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space mismatch: l_{left} vs l_{right}")]
    SpaceMismatch { left: f64, right: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    /// A weight denominator such as `α_n + γ_n` vanished at index `n`.
    #[error("degenerate index n = {n}: {what} is zero")]
    DegenerateIndex { n: u64, what: String },

    #[error(
        "implicit solve did not reach tolerance {tol:e} within {iters} iterations \
         (residual {residual:e})"
    )]
    NonConvergence {
        best: Box<Vector>,
        residual: f64,
        iters: usize,
        tol: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
