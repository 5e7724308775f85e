use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("no embedding for token {0:?}")]
    Lookup(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty distribution: {0}")]
    EmptyDistribution(&'static str),

    #[error("infeasible transport problem: {0}")]
    Infeasible(String),

    #[error("transport solver did not converge after {0} pivots")]
    NoConvergence(usize),

    #[error("no usable references for image {0:?}")]
    NoReferences(String),

    #[error("alignment error at position {index}: expected {expected}, found {found}")]
    Alignment {
        index: usize,
        expected: String,
        found: String,
    },

    #[error("image id mismatch: {0:?} vs {1:?}")]
    ImageMismatch(String, String),

    #[error("duplicate image id {id:?} at {path}:{line}")]
    DuplicateImage {
        path: PathBuf,
        line: usize,
        id: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
