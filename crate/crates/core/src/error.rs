use thiserror::Error;

/// Errors produced by the data types and trainers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two objects that must agree on shape did not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A training step or series evaluation produced a non-finite value.
    #[error("numeric divergence: {0}")]
    NumericDivergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn divergence(msg: impl Into<String>) -> Self {
        Error::NumericDivergence(msg.into())
    }
}
