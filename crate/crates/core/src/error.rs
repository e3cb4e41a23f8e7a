use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
    #[error("evaluation point too close to a pole: {0}")]
    Singular(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("numerically infeasible: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::DimensionCap(_) | Error::Parse(_) => 2,
            Error::Singular(_) | Error::Eigen(_) | Error::Infeasible(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
