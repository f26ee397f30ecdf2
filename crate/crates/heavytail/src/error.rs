use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument or a type invariant was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed external data (CSV, JSON). Carries a human-readable
    /// location such as a row number when one is available.
    #[error("parse error{}: {message}", match .row { Some(r) => format!(" at row {r}"), None => String::new() })]
    Parse { row: Option<usize>, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn parse_at(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse { row: Some(row), message: msg.into() }
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse { row: None, message: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
