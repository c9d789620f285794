use std::path::PathBuf;

use thiserror::Error;

use crate::additive::Witness;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} budget exceeded: {requested} > {limit}")]
    Budget {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("verification failed: {0}")]
    Verification(Box<Witness>),

    #[error("verification failed: {0}")]
    Inconsistent(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error:e})")]
    Quadrature { subdivisions: usize, error: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}

impl From<Witness> for Error {
    fn from(w: Witness) -> Self {
        Error::Verification(Box::new(w))
    }
}
