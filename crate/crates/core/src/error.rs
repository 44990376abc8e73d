//! Error taxonomy shared by every module of the harness.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent; names the field.
    #[error("invalid configuration: {field}: {message}")]
    Config {
        field: &'static str,
        message: String,
    },

    /// An operation precondition does not hold (bad segment length, k > n, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Input data is unusable: missing labels or ratings, mismatched ids.
    #[error("data error: {0}")]
    Data(String),

    /// A row subset is statistically degenerate (single class, too few rows).
    /// Callers running inner folds catch this variant to skip the fold.
    #[error("degenerate rows: {0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// On-disk payload does not match its declared format.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A bug: an internal invariant was violated.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
