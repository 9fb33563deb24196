//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input had a different dimension or length than required.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An input contained NaN or infinite entries.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// An input was degenerate (e.g. a zero vector that cannot be normalized).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A class index or similar was out of range.
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// An operation received an empty collection it cannot work with.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A session-protocol rule was violated (label collision, session
    /// regression, unseen test label, ...).
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// Optimization produced a non-finite loss; the run is aborted with
    /// diagnostics instead of silently clamping.
    #[error("numerical divergence: {0}")]
    Divergence(String),

    /// A data file could not be parsed; `line` is 1-based.
    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    /// A configuration file was invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A checkpoint file was invalid or from an unsupported version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
