use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("shape mismatch: expected {expected}, got {got} ({what})")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} index {index} out of range (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("model exceeds capacity: {0}")]
    Capacity(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
