use thiserror::Error;

use crate::pattern::Link;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("failure set is not contained in the link set: {0:?} is not a link")]
    GammaNotSubset(Link),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("gain has a nonzero entry outside its information pattern at (actuator {actuator}, sensor {sensor})")]
    PatternViolation { actuator: usize, sensor: usize },

    #[error("state bipartite graph has no perfect matching (assumption A1 violated)")]
    AssumptionA1Violated,

    #[error("pattern is not structurally controllable")]
    NotControllable,

    #[error("pattern is not structurally observable")]
    NotObservable,

    #[error("no feasible information pattern after excluding previous rounds: {0}")]
    InfeasibleAfterExclusion(String),

    #[error("sequential pairing needs a non-empty matching")]
    EmptyMatching,

    #[error("limit exceeded: {0}")]
    LimitExceeded(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("maximum number of iterations ({0}) reached")]
    MaxIterations(usize),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
