use std::process::ExitCode;

use thiserror::Error;

use ripvac_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{failed} of {total} cells failed to converge")]
    Convergence { failed: usize, total: usize },

    #[error("{0}")]
    Kinematic(CoreError),

    #[error("{0} oracle check(s) failed")]
    ValidationFailed(usize),

    #[error("{0}")]
    Core(CoreError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParam(msg) => CliError::Invalid(msg),
            CoreError::NoPartnerSolution
            | CoreError::DegenerateConstraint
            | CoreError::BelowThreshold { .. } => CliError::Kinematic(e),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Convergence { .. } => 3,
            CliError::Kinematic(_) => 4,
            CliError::ValidationFailed(_) | CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
