use std::path::PathBuf;

use dform_core::ErrorKind;
use serde::Serialize;

/// Process exit status for each class of failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success = 0,
    Validation = 1,
    Rejected = 2,
    Io = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("write failed: {0}")]
    Output(#[source] std::io::Error),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("{context}: {source}")]
    Math {
        context: String,
        #[source]
        source: dform_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Check(String),
    #[error("{0} self-test suite(s) failed")]
    SelftestFailed(usize),
}

impl CliError {
    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn math(context: impl Into<String>, source: dform_core::Error) -> Self {
        CliError::Math {
            context: context.into(),
            source,
        }
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Io { .. } | CliError::Output(_) => ExitStatus::Io,
            CliError::Math { source, .. } if source.kind() == ErrorKind::Rejected => {
                ExitStatus::Rejected
            }
            CliError::Check(_) => ExitStatus::Rejected,
            _ => ExitStatus::Validation,
        }
    }

    /// Short machine-readable tag.
    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Io { .. } | CliError::Output(_) => "io",
            CliError::Syntax { .. } => "syntax",
            CliError::Schema { .. } => "schema",
            CliError::Math { source, .. } if source.kind() == ErrorKind::Rejected => "rejected",
            CliError::Math { .. } => "invalid",
            CliError::Usage(_) => "usage",
            CliError::Check(_) => "check_failed",
            CliError::SelftestFailed(_) => "selftest_failed",
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Wraps a core error with a short description of the step that failed.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for dform_core::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| CliError::math(what, e))
    }
}
