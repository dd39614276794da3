use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input is too large for an exhaustive routine.
    #[error("size limit exceeded: {0}")]
    Size(String),

    /// The model lacks a capability the operation needs (enumerator, conditioner).
    #[error("missing capability: {0}")]
    Capability(String),

    /// Two routes to the same quantity disagree.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
