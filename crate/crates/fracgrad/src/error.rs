//! Error type shared by all library modules.

use thiserror::Error;

/// Errors produced while building kernels, solving, or validating inputs.
#[derive(Debug, Error)]
pub enum FracError {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Two objects that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The domain has no interior cells at this resolution.
    #[error("domain is empty on the grid: {0}")]
    EmptyDomain(String),

    /// A cached kernel file exists but does not match the requested table.
    #[error("kernel cache mismatch: {0}")]
    CacheMismatch(String),

    /// Wraps I/O failures from cache reads and writes.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// An internal consistency check failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Convenient result alias used across the library.
pub type Result<T> = std::result::Result<T, FracError>;
