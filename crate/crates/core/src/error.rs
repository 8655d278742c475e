use thiserror::Error;

/// Errors raised by the operator and sequence routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("nonzero index: operator has index {0}, factorization requires index 0")]
    NonzeroIndex(i64),

    #[error("trace mismatch: projection has rank {rank} on the window, expected {expected}")]
    TraceMismatch { rank: usize, expected: usize },
}

impl Error {
    /// True for failures of a numerical check (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::NonzeroIndex(_) | Error::TraceMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
