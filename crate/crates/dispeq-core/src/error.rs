//! Error types shared across the library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented range or invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An input sequence has the wrong length for the requested operation.
    #[error("length error: {0}")]
    Length(String),

    /// Sequences that must be aligned have mismatched lengths.
    #[error("alignment error: expected {expected} items, got {got}")]
    Alignment { expected: usize, got: usize },

    /// An input value is outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The adaptive filter diverged (non-finite weight or runaway norm).
    #[error("equalizer diverged at symbol {symbol}")]
    Divergence { symbol: usize },

    /// An iterative estimator failed to converge; carries the best estimate.
    #[error("estimator did not converge after {iterations} iterations (last estimate {estimate})")]
    NonConvergent { iterations: usize, estimate: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
