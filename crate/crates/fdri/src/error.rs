//! Error type shared by every module of the crate.

use std::fmt;
use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A precondition on an argument was violated (bad dimension, parameter
    /// out of range, malformed flag combination).
    InvalidArgument(String),
    /// The Gram matrix of the measurement matrix is numerically singular;
    /// carries the condition estimate that triggered the rejection.
    RankDeficient { condition: f64, detail: String },
    /// An internal numerical invariant failed (e.g. the imaginary residue of
    /// a circulant application exceeded its tolerance).
    InternalConsistency(String),
    /// Filesystem failure, annotated with the offending path.
    Io { path: PathBuf, source: std::io::Error },
    /// A container or image file could not be parsed.
    Format(String),
    /// Stored provenance (digest, parameters) does not match the supplied data.
    Provenance(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::RankDeficient { condition, detail } => {
                write!(f, "rank deficiency: {detail} (condition estimate {condition:.3e})")
            }
            Error::InternalConsistency(msg) => write!(f, "internal consistency: {msg}"),
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Provenance(msg) => write!(f, "provenance mismatch: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
