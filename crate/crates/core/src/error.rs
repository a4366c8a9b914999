use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data or bad configuration.
    Validation,
    /// Filesystem failure or unreadable artifact.
    Io,
    /// An internal invariant did not hold.
    Consistency,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("curve '{id}' is degenerate: {reason}")]
    DegenerateCurve { id: String, reason: String },

    #[error("degenerate bins: {0}")]
    DegenerateBins(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: corrupt file: {message}", path.display())]
    CorruptFile {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("internal consistency error: {0}")]
    Consistency(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Config(_)
            | Error::DegenerateCurve { .. }
            | Error::DegenerateBins(_) => ErrorKind::Validation,
            Error::Io { .. } | Error::CorruptFile { .. } => ErrorKind::Io,
            Error::Consistency(_) => ErrorKind::Consistency,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::CorruptFile {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
