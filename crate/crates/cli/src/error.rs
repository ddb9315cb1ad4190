use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}:{line}: field `{field}`: {message}")]
    Parse { file: String, line: u64, field: String, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }

    /// Single-line structured record written to stderr on failure.
    pub fn to_record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: Inner<'a>,
        }
        #[derive(Serialize)]
        struct Inner<'a> {
            kind: &'a str,
            exit_code: i32,
            message: String,
        }
        serde_json::to_string(&Record {
            error: Inner { kind: self.kind(), exit_code: self.exit_code(), message: self.to_string() },
        })
        .expect("error record serializes")
    }
}

impl From<sejkit_core::Error> for CliError {
    fn from(e: sejkit_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
