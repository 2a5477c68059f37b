use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("matrix is singular to working precision ({context})")]
    SingularMatrix { context: String },

    #[error("shift {target} makes the pencil singular; perturb the target")]
    ShiftSingular { target: f64 },

    #[error("solver failure after {iterations} iterations (residual {residual:e}): {reason}")]
    SolverFailure {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    #[error("energy {z} lies in the spectrum of H0 (H0 - z is singular)")]
    SpuriousEnergy { z: f64 },

    #[error("energy {z} lies in the spectrum of the channel operator H0 + V{pair}")]
    ChannelEnergy { pair: String, z: f64 },

    #[error("precondition violated: (z, Psi) is not an eigenpair of H (residual {residual:e})")]
    PreconditionViolation { residual: f64 },

    #[error("theorem violation: {0}")]
    TheoremViolation(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),
}

pub type Result<T, E = FyError> = std::result::Result<T, E>;
