use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed arguments: bad qubit index, length mismatch, non-bijective map.
    #[error("invalid input: {0}")]
    Input(String),
    /// A channel operation issued out of order or without consensus.
    #[error("protocol violation: {0}")]
    Protocol(String),
    /// A branch that the Born rule says cannot happen was reached.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
