use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are coarse on purpose: the CLI maps them onto process exit
/// codes (data problems vs. numeric failures), so callers mostly care about
/// which bucket an error falls into.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("architecture mismatch: {0}")]
    Architecture(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("explainer `{explainer}` failed: {reason}")]
    Explainer { explainer: String, reason: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: record {record}: {reason}")]
    Record {
        path: String,
        record: usize,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by non-finite or degenerate arithmetic rather
    /// than by malformed inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::Explainer { .. })
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
