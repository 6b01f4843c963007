use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: non-finite entries, shape mismatches, bad JSON payloads.
    #[error("input error: {0}")]
    Input(String),

    /// An operation was called outside the domain on which it is defined,
    /// e.g. a non-contraction handed to the functional calculus.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
