use rankone_core::{AnalysisError, CoreError};
use thiserror::Error;

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::File { .. } => EXIT_NO_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::PreconditionViolated(_) | AnalysisError::Core(_) => CliError::Usage(e.to_string()),
            AnalysisError::Internal(_) | AnalysisError::Lp(_) => CliError::Internal(e.to_string()),
        }
    }
}
