use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the ingestion, training and evaluation stack.
#[derive(Debug, Error)]
pub enum ElmError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: label must be 0 or 1, got {value:?}")]
    Label { line: usize, value: String },

    #[error("schema: {0}")]
    Schema(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("split: {0}")]
    Split(String),

    #[error("matrix is not positive definite at pivot {pivot} (value {value:e}); use a ridge penalty lambda > 0")]
    Singular { pivot: usize, value: f64 },

    #[error("numeric: {0}")]
    Numeric(String),

    #[error("training diverged at step {step}: loss is not finite (lower the learning rate)")]
    Divergence { step: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ElmError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ElmError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        ElmError::Shape(msg.into())
    }
}

pub type Result<T, E = ElmError> = std::result::Result<T, E>;
