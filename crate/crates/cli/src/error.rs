use fy_core::FyError;
use thiserror::Error;

/// Everything a command can fail with, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] FyError),
}

impl CliError {
    /// 1 solver failure, 2 config or usage error, 3 theorem violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                FyError::InvalidInput(_) | FyError::TooLarge { .. } => 2,
                FyError::TheoremViolation(_) | FyError::InternalConsistency(_) => 3,
                FyError::SingularMatrix { .. }
                | FyError::ShiftSingular { .. }
                | FyError::SolverFailure { .. }
                | FyError::SpuriousEnergy { .. }
                | FyError::ChannelEnergy { .. }
                | FyError::PreconditionViolation { .. } => 1,
            },
        }
    }
}
