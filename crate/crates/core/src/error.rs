use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input data is malformed or too short for the requested operation.
    #[error("input error: {0}")]
    Input(String),
    /// A configuration violates one of its structural invariants.
    #[error("configuration error: {0}")]
    Config(String),
    /// A file could not be decoded.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn format<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}
