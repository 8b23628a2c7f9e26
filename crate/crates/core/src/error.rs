use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    /// Malformed input at a known line.
    #[error("{origin}:{line}: {message}")]
    Format {
        origin: String,
        line: usize,
        message: String,
    },

    /// Malformed input not tied to a single line (holes, empty files, bad specs).
    #[error("{0}")]
    Input(String),

    /// Inputs parse but violate an operation's preconditions.
    #[error("{0}")]
    Contract(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(origin: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool: 2 for input-format
    /// errors, 3 for contract violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Input(_) | Error::Json(_) => 2,
            Error::Contract(_) => 3,
        }
    }
}

macro_rules! contract {
    ($($arg:tt)*) => {
        $crate::error::Error::Contract(format!($($arg)*))
    };
}
pub(crate) use contract;
