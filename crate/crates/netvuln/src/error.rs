use thiserror::Error;

/// Errors produced by graph construction, scoring, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid edge weight {weight} on edge {src} -> {dst} (must be positive and finite)")]
    InvalidWeight {
        src: String,
        dst: String,
        weight: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node {node} out of range (graph has {count} nodes)")]
    NodeOutOfRange { node: u32, count: usize },

    #[error("no nodes")]
    EmptyGraph,

    #[error("graph has zero total edge weight")]
    ZeroWeight,

    #[error("unknown node id {id:?}")]
    UnknownNode { id: String },

    #[error("node {id:?} missing from assignment")]
    MissingAssignment { id: String },

    #[error("duplicate assignment for node {id:?}")]
    DuplicateAssignment { id: String },

    #[error("no edge {src} -> {dst}")]
    MissingEdge { src: u32, dst: u32 },

    #[error("score {value} outside [0, 1]")]
    ScoreOutOfRange { value: f64 },

    #[error("inconsistent node universes: {message}")]
    InconsistentUniverse { message: String },

    #[error("k must be positive")]
    InvalidK,

    #[error("no community with ground-truth spreader boundary nodes")]
    NoGroundTruth,

    #[error("invalid parameter: {message}")]
    InvalidParams { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
