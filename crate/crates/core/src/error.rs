use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("element {id} outside ground set of size {size}")]
    OutOfRange { id: u32, size: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::ContractViolation(_) | Error::ProtocolViolation(_) => 3,
            _ => 1,
        }
    }
}
