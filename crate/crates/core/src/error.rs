use thiserror::Error;

use crate::gridmap::Cell;

/// Errors raised across the simulator, planners and map tooling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorpError {
    #[error("map format error: {0}")]
    Format(String),
    #[error("degenerate map: {0}")]
    DegenerateMap(String),
    #[error("map generation failed after {attempts} attempts")]
    GenerationFailure { attempts: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cell {0:?} is not navigable")]
    NotNavigable(Cell),
    #[error("invalid episode spec: {0}")]
    Spec(String),
    #[error("invalid episode state: {0}")]
    State(String),
    #[error("nothing to plan: no seen unrearranged or held objects")]
    EmptyInstance,
    #[error("instance with {n_s} objects exceeds the exact solver bound {bound}")]
    SizeBound { n_s: usize, bound: usize },
    #[error("agent is stuck: {0}")]
    Stuck(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = MorpError> = std::result::Result<T, E>;
