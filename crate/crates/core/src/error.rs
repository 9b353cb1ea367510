use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the riskcast pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left:?} vs {right:?} ({context})")]
    Dimension {
        left: Vec<usize>,
        right: Vec<usize>,
        context: &'static str,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("window error: sequence length {len} is shorter than window {window}")]
    Window { len: usize, window: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("schema error in {file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },

    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("insufficient data: need at least {needed} rows, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("R² is undefined when the target has zero variance")]
    UndefinedR2,

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(left: &[usize], right: &[usize], context: &'static str) -> Self {
        Error::Dimension {
            left: left.to_vec(),
            right: right.to_vec(),
            context,
        }
    }
}
