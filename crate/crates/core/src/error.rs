use thiserror::Error;

/// Failure categories shared by every operation in the crate.
///
/// The categories map one-to-one onto the command-line exit codes
/// (configuration and domain errors are both "bad input").
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A model or request is internally inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical procedure failed to reach its accuracy target.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::Numeric(msg.into())
}
