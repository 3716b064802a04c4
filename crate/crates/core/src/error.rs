use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Input parsed but violates a data invariant (unknown label, duplicate id, range).
    #[error("validation error: {0}")]
    Validation(String),

    /// An argument fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Training produced a NaN or infinity.
    #[error("non-finite value at step {step}: {what}")]
    NonFinite { step: usize, what: String },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a defect.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::Domain(_) | Error::Io { .. }
        )
    }
}
