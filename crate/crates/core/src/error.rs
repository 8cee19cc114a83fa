use std::path::PathBuf;

use thiserror::Error;

use crate::factors::Estimator;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("factor table has no entry for ({estimator}, n = {n})")]
    TableIncomplete { estimator: Estimator, n: usize },

    #[error("pooling type D is not defined for location estimators")]
    InvalidForLocation,

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("factor table version mismatch: file has {found:?}, expected {expected:?}")]
    VersionMismatch { found: String, expected: String },

    #[error("factor table checksum mismatch (file is corrupt or was edited)")]
    ChecksumMismatch,

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::LengthMismatch {
            what,
            got,
            expected,
        });
    }
    Ok(())
}
