//! Crate-wide error type with stable process exit-code mapping.

use std::path::{Path, PathBuf};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input data or arguments (bad dimensions, counts, ranges).
    #[error("validation: {0}")]
    Validation(String),

    /// Invalid configuration (bad parameter combinations, missing inputs).
    #[error("configuration: {0}")]
    Config(String),

    /// Filesystem failure.
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file contents (bad magic, truncated payload, parse error).
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// Numeric failure (divergence, NaN, singular system).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 validation/config/format, 2 io, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Config(_) | Error::Format { .. } => 1,
            Error::Io { .. } => 2,
            Error::Numeric(_) => 3,
        }
    }
}
