use std::path::PathBuf;

use thiserror::Error;

use crate::mask::Dims;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two masks that must share a raster were given different sizes.
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: Dims, found: Dims },

    /// A run-length object violates its invariants.
    #[error("malformed RLE: {0}")]
    Format(String),

    /// Sequences that must cover the same frames do not.
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input was not well-formed JSON.
    #[error("{path}: parse error: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// JSON was well-formed but did not match the expected schema.
    #[error("{path}: schema error: {message}")]
    Schema { path: PathBuf, message: String },

    /// Schema-valid content that breaks a manifest invariant.
    #[error("{path}: integrity error: {message}")]
    Integrity { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable identifier for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Format(_) => "format",
            Error::Alignment(_) => "alignment",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::Integrity { .. } => "integrity",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
