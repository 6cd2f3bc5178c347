//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by corpus handling, training, and model I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A corpus file line failed to parse or violated a record invariant.
    #[error("corpus error at line {line}: {message}")]
    CorpusLine { line: usize, message: String },

    /// A required field was missing or out of range.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Generator or training configuration rejected.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Tensor or parameter shapes disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A gradient or loss stopped being finite; training aborts.
    #[error("non-finite value in {context}: {detail}")]
    NonFinite { context: String, detail: String },

    /// Model file problems: bad magic, version, or checksum.
    #[error("model file error: {0}")]
    ModelFile(String),

    /// An operation was called on the wrong kind of model bundle.
    #[error("wrong model kind: expected {expected}, got {got}")]
    WrongModelKind { expected: String, got: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidData(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::ShapeMismatch(msg.into())
}
