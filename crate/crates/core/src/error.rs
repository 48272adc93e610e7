use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid index set: {0}")]
    IndexSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("helper data belongs to a different code (fingerprint {helper}, spec {spec})")]
    FingerprintMismatch { helper: String, spec: String },

    #[error("helper data scheme is {actual}, expected {expected}")]
    SchemeMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
