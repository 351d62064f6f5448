use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is infeasible at coordinate {index}: {value} not in [{lower}, {upper}]")]
    Infeasible {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("objective returned a non-finite value ({value}) at {point:?}")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },

    #[error("gradient is not finite")]
    NonFiniteGradient,

    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(u64),

    #[error("line search on coordinate {coordinate} exceeded {cap} expansion steps; objective may be unbounded below")]
    ExpansionCap { coordinate: usize, cap: usize },

    #[error("{0}")]
    MissingMetadata(String),

    #[error("reference point not stationary (residual {0:e})")]
    NotStationary(f64),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}
