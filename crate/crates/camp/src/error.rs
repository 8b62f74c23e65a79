use thiserror::Error;

/// Errors surfaced by the planning toolkit.
#[derive(Debug, Error)]
pub enum CampError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("value {value} is not in the domain of variable `{variable}`")]
    ValueNotInDomain { variable: String, value: i64 },

    #[error("invalid variable spec for `{variable}`: {reason}")]
    InvalidVariableSpec { variable: String, reason: String },

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("context `{0}` is unsatisfiable")]
    UnsatisfiableContext(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("empty trajectory set")]
    EmptyTrajectorySet,

    #[error("policy failed at step {step}: {reason}")]
    PolicyFailure { step: usize, reason: String },

    #[error("state space too large for enumeration: visited {visited} > cap {cap}")]
    StateSpaceTooLarge { visited: usize, cap: usize },

    #[error("exact transition distribution unavailable")]
    NoTransitionDist,

    #[error("cannot lift the sink state to a concrete state")]
    LiftSink,

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CampError>;
