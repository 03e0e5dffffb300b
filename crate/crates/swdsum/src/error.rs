//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The CLI maps these onto exit codes: usage problems exit 1,
/// data/format problems exit 2, numerical divergence exits 3.
#[derive(Debug, Error)]
pub enum SwdError {
    /// Tensor shapes are incompatible for the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value is outside an operation's mathematical domain (e.g. log of
    /// a non-positive number).
    #[error("domain error: {0}")]
    Domain(String),

    /// An input that the operation cannot meaningfully process, such as a
    /// fully masked softmax row or an empty document.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A token id outside the vocabulary, or a mangled vocabulary file.
    #[error("vocabulary error: {0}")]
    Vocab(String),

    /// Raw corpus data that cannot be ingested (empty text, bad JSON line).
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// A malformed checkpoint, sidecar, or other on-disk artifact.
    #[error("format error: {0}")]
    Format(String),

    /// An invalid configuration file or setting.
    #[error("config error: {0}")]
    Config(String),

    /// An invalid argument to a library operation (not a CLI usage error).
    #[error("argument error: {0}")]
    Argument(String),

    /// A synthetic-corpus spec that cannot be satisfied.
    #[error("generation error: {0}")]
    Generation(String),

    /// Checkpoint and corpus (or vocabulary) do not belong together.
    #[error("compatibility error: {0}")]
    Compatibility(String),

    /// Training produced a non-finite loss or gradient.
    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SwdError>;
