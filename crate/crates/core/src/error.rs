use thiserror::Error;

/// Invalid parameters or scenario content.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("vehicle {id}: {reason}")]
    InvalidVehicle { id: u32, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("platoon must contain at least one follower")]
    Empty,
    #[error("vehicle index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("adjacency must be {n}x{n}, got {rows} rows")]
    Shape { n: usize, rows: usize },
    #[error("self loop at vehicle {0}")]
    SelfLoop(usize),
    #[error("edge {from} -> {to} is not unidirectional (information must flow rearward)")]
    NotUnidirectional { from: usize, to: usize },
    #[error("adjacency and pinning entries must be 0 or 1")]
    NotBinary,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("sequence length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("horizon length must be at least 1")]
    EmptyHorizon,
    #[error("vehicle receives no information (empty information set)")]
    EmptyInformationSet,
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
}
