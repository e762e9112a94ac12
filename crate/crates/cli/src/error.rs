use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed files, shape mismatches.
    #[error("{0}")]
    User(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<qcomplete::Error> for CliError {
    fn from(e: qcomplete::Error) -> Self {
        match e {
            qcomplete::Error::Numerical(m) => CliError::Numerical(m),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::User(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
