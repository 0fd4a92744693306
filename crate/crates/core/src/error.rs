use std::io;

use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is malformed or out of range (bad index, bad shape).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The inputs are well-formed but outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sweep or request failed validation before any work started.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Parse(err.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(e) => Error::Io(e),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(err.to_string())
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
