use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("space has no points")]
    EmptySpace,
    #[error("weight of point {point} is not strictly positive ({weight})")]
    NonPositiveWeight { point: usize, weight: f64 },
    #[error("distance matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("distance matrix entry ({i}, {j}) is invalid: {reason}")]
    InvalidDistance {
        i: usize,
        j: usize,
        reason: &'static str,
    },
    #[error("triangle inequality violated by {excess:e} at ({i}, {j}, {k})")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        excess: f64,
    },
    #[error("graph is disconnected: point {0} is unreachable")]
    Disconnected(usize),
    #[error("unknown point id {0}")]
    UnknownPoint(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no eligible parent for net point {point} at level {level}")]
    NoEligibleParent { level: i32, point: usize },
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("Neumann series did not converge within {iterations} terms")]
    NeumannDiverged { iterations: usize },
    #[error("finest net does not exhaust the cloud ({net} of {points} points)")]
    IncompleteFinestLevel { net: usize, points: usize },
    #[error("ball must contain at least {needed} points, found {found}")]
    BallTooSmall { needed: usize, found: usize },
    #[error("no core-ball radius 2^-j (j <= {max_j}) satisfies the lower bound")]
    NoCoreRadius { max_j: u32 },
}
