use thiserror::Error;

/// Errors produced by the evaluation, optimization and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("direction leaves the policy simplex for every positive step")]
    InfeasibleDirection,

    #[error("step {alpha} leaves the policy simplex along the given direction")]
    InfeasibleStep { alpha: f64 },

    #[error("policy entry {min_entry} is too close to the simplex boundary for epsilon {epsilon}")]
    BoundaryTooClose { epsilon: f64, min_entry: f64 },

    #[error("action {action} out of range for state {state} (num_actions = {num_actions})")]
    ActionOutOfRange {
        state: usize,
        action: usize,
        num_actions: usize,
    },

    #[error("induced chain violates the ergodicity assumption: {0}")]
    NotErgodic(String),

    #[error("linear system is numerically singular: {0}")]
    Singular(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("trace is missing {0}")]
    MissingTraceData(&'static str),

    #[error("exhaustive enumeration needs {count} policies, above the cap of {cap}")]
    EnumerationTooLarge { count: f64, cap: usize },

    #[error("oracle methods disagree: {0}")]
    OracleDisagreement(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("write failed: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
