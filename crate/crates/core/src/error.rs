use thiserror::Error;

use crate::geometry::Dimension;
use crate::solver::SolveResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    Dimension { expected: Dimension, found: Dimension },

    #[error("direction is undefined between coincident points")]
    DegenerateDirection,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid noise standard deviation {0} (must be finite and >= 0)")]
    InvalidNoise(f64),

    #[error("at least 2 receivers are required, got {0}")]
    InsufficientReceivers(usize),

    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(&'static str),

    #[error("inconsistent measurements: {0}")]
    Inconsistent(String),

    #[error("solver did not converge (best residual norm {:.6e} m)", .best.residual_norm)]
    NoConvergence { best: Box<SolveResult> },

    #[error("grid of {nodes} nodes exceeds the budget of {budget}")]
    BudgetExceeded { nodes: u128, budget: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
