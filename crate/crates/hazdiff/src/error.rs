//! Error type shared across the crate.
//!
//! Errors are split into two broad kinds so that the command-line front end
//! can map them onto exit codes: problems with the input (bad files, bad
//! flags, malformed data) and numerical/estimation failures (non-convergence,
//! singular systems, degenerate samples).

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: files, schemas, flag combinations, malformed data.
    #[error("input error: {0}")]
    Input(String),
    /// Numerical or estimation failure on otherwise valid input.
    #[error("estimation error: {0}")]
    Estimation(String),
    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    /// Process exit code for the CLI: 2 for input problems, 3 for
    /// estimation failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Input(_) | Error::Io(_) => 2,
            Error::Estimation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
