use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the crate.
///
/// Variants are grouped so that the command-line front end can map them onto
/// exit codes: usage problems, data problems and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfUnitCube { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown model id {0}")]
    UnknownModel(usize),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("artifact error in {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpace(_)
            | Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::OutOfUnitCube { .. } => 1,
            Error::NotPositiveDefinite { .. } | Error::Numerical(_) => 3,
            Error::UnknownModel(_)
            | Error::Parse { .. }
            | Error::Data(_)
            | Error::Artifact { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 2,
        }
    }
}
