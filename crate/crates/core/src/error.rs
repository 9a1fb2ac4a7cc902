//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes do not line up for the requested operation.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A chunk of the wrong size was pushed into a stream.
    #[error("bad chunk: expected {expected} samples, got {got}")]
    ChunkSize { expected: usize, got: usize },

    /// An attention mask is malformed (e.g. a query row with no allowed key).
    #[error("invalid mask: {0}")]
    Mask(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid config: {0}")]
    Config(String),

    /// An operation was called in a state that forbids it (e.g. push after
    /// finalize, double finalize).
    #[error("invalid state: {0}")]
    State(String),

    /// Input is degenerate for the requested operation (e.g. speaker
    /// embedding of pure silence).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A weights file is malformed or does not match the model config.
    #[error("weights: {0}")]
    Weights(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand used by validators.
pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
