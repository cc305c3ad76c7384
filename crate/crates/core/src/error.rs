use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Contract violations carry the values that
/// triggered them so CLI messages can name both sides.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol {value} at position {index} is outside the alphabet [0, {alphabet})")]
    OutOfAlphabet {
        index: usize,
        value: f64,
        alphabet: usize,
    },

    #[error("value {value} at coordinate {index} is outside the quantizer range [{lo}, {hi}]")]
    QuantizerRange {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{path}: line {line}: {message}")]
    CsvFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{op} is not supported for {kind} models")]
    UnsupportedModel { op: &'static str, kind: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
