use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),
    /// Model parameters, tables or grids violate a construction invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// A numerical procedure failed (no bracket, non-finite value, budget exceeded).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The argument-principle counter could not certify a root count.
    #[error("inconclusive root count: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
