use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("duplicate register name `{0}`")]
    DuplicateRegister(String),

    #[error("register bipartition {dims:?} does not factor dimension {dim}")]
    BadPartition { dims: Vec<usize>, dim: usize },

    #[error("conditioning on a zero-probability outcome")]
    ZeroProbability,

    #[error("size budget exceeded: {required} required, limit {limit}")]
    Budget { required: u128, limit: u128 },

    #[error("question distribution is not product (l1 residual {residual:.6e})")]
    NonProduct { residual: f64 },

    #[error("unsupported answer arity na={na}, nb={nb} without ascent fallback")]
    UnsupportedArity { na: usize, nb: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
