use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The parameters are valid but the scheme cannot be realised with them.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
