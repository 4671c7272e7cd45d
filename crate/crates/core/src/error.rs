use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its permitted range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Tensor or vector dimensions do not compose.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A qubit, class or layer index is out of range.
    #[error("index out of range: {0}")]
    Index(String),

    /// A numeric input was NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A binary or text file did not match its expected layout.
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("unsupported {what} version {found} (expected {expected})")]
    Version {
        what: &'static str,
        found: u16,
        expected: u16,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}
