use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("vanishing denominator |lambda| = {magnitude:.3e} for non-steady state {state}")]
    Degeneracy { state: String, magnitude: f64 },

    #[error("resummation pole at state {state}: |1 - sigma| = {magnitude:.3e}")]
    ResummationPole { state: String, magnitude: f64 },

    #[error("defective Liouvillian: eigenvectors are not complete ({0})")]
    Defective(String),

    #[error("observable needs rank {required} but the expansion stops at rank {available}")]
    InsufficientRank { required: usize, available: usize },

    #[error("quadrature did not converge with {nodes} nodes (last change {change:.3e})")]
    Quadrature { nodes: usize, change: f64 },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("steady state is not unique: {0}")]
    DegenerateSteadyState(String),

    #[error("state space too large: dimension {dim} exceeds bound {bound}")]
    TooLarge { dim: usize, bound: usize },

    #[error("trajectory {trajectory} (seed {seed}) aborted at step {step}: {reason}")]
    Trajectory { seed: u64, trajectory: usize, step: usize, reason: String },

    #[error("malformed table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
