use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("insufficient data for {test}: need at least {needed} bits, got {got}")]
    InsufficientData {
        test: &'static str,
        needed: usize,
        got: usize,
    },

    /// Slot indices are not strictly increasing (or violate the dead-time floor).
    #[error("malformed event stream at index {index}: {reason}")]
    MalformedStream { index: usize, reason: String },

    /// A generator would never (or not within budget) produce the requested events.
    #[error("no detection within slot budget of {budget} slots")]
    NonTermination { budget: u64 },

    #[error("configuration mismatch: {0}")]
    Config(String),

    /// Located parse failure: 1-based line, or record number for binary input (0 for the whole file).
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by input data rather than by how the tool was invoked.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Config(_) | Error::Domain(_))
    }
}
