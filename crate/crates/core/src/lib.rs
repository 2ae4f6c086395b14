//! Fully dynamic approximate maximum matching.
//!
//! The crate maintains matchings under edge insertions and deletions through
//! a damaged edge-degree-constrained subgraph (EDCS) sparsifier, turns
//! batch-dynamic algorithms into worst-case ones with a staggered scheduler,
//! removes additive error through vertex-set sparsification and provides a
//! batch-dynamic uniform fractional-matching sparsifier. An exact blossom
//! oracle checks every structural guarantee at desk scale.

pub mod edcs;
pub mod gen;
pub mod harness;
pub mod graph;
pub mod matcher;
pub mod oracle;
pub mod scheduler;
pub mod uniform;
pub mod vsparsify;
pub mod work;

pub use graph::{DynamicGraph, Edge, GraphError, UpdateEvent, UpdateKind, VertexId};
pub use oracle::Matching;
