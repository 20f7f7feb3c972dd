//! Trust-based vulnerability analysis for directed social graphs.
//!
//! The pipeline: ingest a directed follower graph, compute per-node
//! trustingness/trustworthiness scores by iterative propagation, detect
//! communities, classify nodes into boundary/core/neighbor roles, score
//! the vulnerability of boundary nodes and communities to externally
//! spreading information, and evaluate the resulting rankings against
//! ground-truth spreader sets.

pub mod community;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod roles;
pub mod synth;
pub mod trust;
pub mod util;
pub mod vulnerability;

pub use error::Error;
pub use graph::{DirectedGraph, EdgeListFormat, NodeId, UndirectedView};

pub type Result<T> = std::result::Result<T, Error>;
