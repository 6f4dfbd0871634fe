use thiserror::Error;

/// Error type shared by all modules.
///
/// The variants map onto the CLI exit codes: invalid input and overflow are
/// precondition violations (exit 2), `Budget` is a resource refusal issued
/// before any work starts (exit 4), and `Inconsistency` flags an internal
/// cross-check that failed, e.g. an exponential-sum value that should be an
/// integer but is not (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn overflow(msg: impl Into<String>) -> Self {
        Error::Overflow(msg.into())
    }

    pub fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }

    pub fn inconsistency(msg: impl Into<String>) -> Self {
        Error::Inconsistency(msg.into())
    }

    /// Process exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Overflow(_) => 2,
            Error::Inconsistency(_) => 3,
            Error::Budget(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
