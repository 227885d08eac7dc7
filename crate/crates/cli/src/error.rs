use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: missing field `{field}`")]
    MissingField { path: PathBuf, field: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("plotting needs a 2-dimensional problem, got dimension {0}")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Core(#[from] rbc_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Maps a JSON error to a missing-field or a positioned parse error.
    pub fn json(path: impl Into<PathBuf>, err: serde_json::Error) -> Self {
        let path = path.into();
        let msg = err.to_string();
        if let Some(rest) = msg.strip_prefix("missing field `") {
            if let Some(field) = rest.split('`').next() {
                return CliError::MissingField {
                    path,
                    field: field.to_string(),
                };
            }
        }
        let message = match msg.rfind(" at line ") {
            Some(i) => msg[..i].to_string(),
            None => msg,
        };
        CliError::Parse {
            path,
            line: err.line(),
            column: err.column(),
            message,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
