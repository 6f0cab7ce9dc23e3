use thiserror::Error;

use crate::dynamics::BodyId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("simulation diverged: body {body} has a non-finite state at step {step}")]
    Diverged { body: BodyId, step: u64 },

    #[error("invalid state: {0}")]
    State(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("validation error: {field}: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_user_error(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::Parse { .. } | Error::Validation { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
