use thiserror::Error;

/// Errors produced by validation and numeric layers of the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An input was structurally valid but numerically unusable
    /// (all-zero periodogram, empty denominator, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    /// The training set produced an unusable averaged periodogram.
    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),
    /// A series expansion or iteration failed to converge within its cap.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
