use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("endpoint {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge value {value} at edge {index} must be positive and finite")]
    InvalidEdgeValue { index: usize, value: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty cluster")]
    EmptyCluster,

    #[error("clusters do not partition the node set: {0}")]
    NotAPartition(String),

    #[error("eigenvalue window [{lo}, {hi}] is empty")]
    EmptyWindow { lo: usize, hi: usize },

    #[error("{got} edges exceeds the enumeration limit of {limit}")]
    TooManyEdges { got: usize, limit: usize },

    #[error("filter response {value} exceeds 1 at lambda = {lambda}")]
    FilterNotBounded { lambda: f64, value: f64 },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
