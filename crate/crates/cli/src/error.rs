//! CLI error taxonomy mapped onto process exit codes.

use std::process::ExitCode;

/// Failure stages of a scenario run. Parse problems are file-shape issues,
/// validation problems are semantic ones caught before any analysis runs,
/// analysis problems propagate from the engine.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("analysis error: {0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Parse(_) => ExitCode::from(2),
            CliError::Validation(_) => ExitCode::from(3),
            CliError::Analysis(_) => ExitCode::from(4),
        }
    }

    /// Wraps an engine error raised while executing an analysis.
    pub fn analysis(err: clamp_core::Error) -> Self {
        CliError::Analysis(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Parse(err.to_string())
    }
}
