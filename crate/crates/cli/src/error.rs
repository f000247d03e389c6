//! Harness errors mapped onto process exit codes.

use std::fmt;

/// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 acceptance
/// failure.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 2).
    Config(String),
    /// A numeric operation failed downstream (exit 3).
    Numeric(remlab_core::Error),
    /// I/O trouble reading inputs or writing outputs (exit 3).
    Io(std::io::Error),
    /// A report was requested for a manifest without outputs (exit 3).
    MissingOutput,
    /// The verification suite ran but one or more criteria failed (exit 4).
    Acceptance { failed: usize },
}

impl CliError {
    pub fn config(msg: String) -> Self {
        CliError::Config(msg)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) | CliError::MissingOutput => 3,
            CliError::Acceptance { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::MissingOutput => write!(f, "manifest has no outputs to report on"),
            CliError::Acceptance { failed } => {
                write!(
                    f,
                    "verification failed: {failed} criterion(s) out of tolerance"
                )
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<remlab_core::Error> for CliError {
    fn from(e: remlab_core::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
