use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: malformed record: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invalid record {record}: {message}")]
    Invalid { record: String, message: String },

    #[error("label reduced to empty: {0:?}")]
    EmptyLabel(String),

    #[error("missing embedding key {0:?}")]
    MissingKey(String),

    #[error("embedding dimension mismatch for key {key:?}: expected {expected}, got {got}")]
    DimMismatch {
        key: String,
        expected: usize,
        got: usize,
    },

    #[error("empty pooling window for {channel} (range [{start}, {end}] on {frames} frames)")]
    EmptyWindow {
        channel: &'static str,
        start: i64,
        end: i64,
        frames: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("config hash mismatch: expected {expected}, found {found}")]
    ConfigHash { expected: String, found: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate differences: paired differences have zero variance")]
    DegenerateDifferences,

    #[error("scene generation failed: {0}")]
    Generation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(record: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            record: record.into(),
            message: message.into(),
        }
    }
}
