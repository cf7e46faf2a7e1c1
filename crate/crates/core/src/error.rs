use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unknown function id {fid}; catalog has {available:?}")]
    Catalog { fid: u32, available: Vec<u32> },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    /// Input data is well-formed but inconsistent (coverage gaps, bad values).
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Catalog { .. } | Error::Parse { .. } | Error::Validation(_)
        )
    }
}
