use thiserror::Error;

/// Errors raised across the library. Each variant maps to a stable
/// machine-readable code used by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("solver failed after {iterations} iterations: {message}")]
    Solver { iterations: usize, message: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Input(_) => "E_INPUT",
            Error::Capacity(_) => "E_CAPACITY",
            Error::Unsupported(_) => "E_UNSUPPORTED",
            Error::Format(_) => "E_FORMAT",
            Error::Solver { .. } => "E_SOLVER",
            Error::Verification(_) => "E_VERIFY",
            Error::Io(_) => "E_IO",
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
