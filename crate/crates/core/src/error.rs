use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (max |M - M†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("density operator trace {trace} differs from 1")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not unitary (max |U†U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("vector norm {norm} differs from 1")]
    NotNormalized { norm: f64 },
    #[error("completeness defect: max |Σ - I| = {deviation:e}")]
    Incomplete { deviation: f64 },
    #[error("outcome {outcome} has no Kraus operators")]
    EmptyKrausSet { outcome: f64 },
    #[error("outcome label {0} appears more than once")]
    DuplicateOutcome(String),
    #[error("outcome and operator lists differ in length ({outcomes} vs {operators})")]
    LengthMismatch { outcomes: usize, operators: usize },
    #[error("outcome {outcome} has probability {probability:e}; conditioning is undefined")]
    OutcomeProbabilityZero { outcome: f64, probability: f64 },
    #[error("outcome {0} is not in the outcome set")]
    UnknownOutcome(f64),
    #[error("a channel must have exactly one outcome, found {outcomes}")]
    MultiOutcomeChannel { outcomes: usize },
    #[error("observables do not commute (max |[C, D]| = {norm:e})")]
    NonCommutingPair { norm: f64 },
    #[error("disturbance η = {eta:e} is not zero")]
    DisturbanceNotZero { eta: f64 },
    #[error("noise ε = {eps:e} is not zero")]
    NoiseNotZero { eps: f64 },
    #[error("noise for {which} is not uncorrelated")]
    NotUncorrelated { which: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}
