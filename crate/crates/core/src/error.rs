use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty graph")]
    EmptyGraph,

    #[error("invalid weight {weight} on edge ({u}, {w})")]
    InvalidWeight { u: String, w: String, weight: f64 },

    #[error("degenerate similarity: all entries are equal")]
    DegenerateSimilarity,

    #[error("invalid similarity matrix: {0}")]
    InvalidSimilarity(String),

    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pinned cluster {cluster} for node {node} is out of range for k = {k}")]
    PinnedOutOfRange { node: usize, cluster: usize, k: usize },

    #[error("conflicting labels for node {0}")]
    ConflictingLabel(String),

    #[error("label for unknown node {0}")]
    UnknownNode(String),

    #[error("orthogonal iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("cosine of a zero vector is undefined")]
    ZeroVector,

    #[error("point cloud is not centered (max column sum {0:e})")]
    NotCentered(f64),

    #[error("target dimension {target} is smaller than data dimension {dim}")]
    LiftDimension { target: usize, dim: usize },

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
