//! Fuse graphs: dense peelable random hypergraphs.
//!
//! * [`hypergraph`]: fuse-graph and Erdős–Rényi generators, text dumps.
//! * [`peeler`]: 2-core by round-synchronous or work-queue peeling.
//! * [`orient`]: orientability via maximum matching.
//! * [`threshold`]: survival operators, fixed points, erosion/consolidation
//!   certificates and threshold bracketing.
//! * [`retrieval`]: static XOR retrieval over fuse graphs.
//! * [`montecarlo`]: independent, seed-derived trials.

pub mod error;
pub mod exec;
pub mod hypergraph;
pub mod montecarlo;
pub mod orient;
pub mod peeler;
pub mod retrieval;
pub mod rng;
pub mod threshold;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hypergraph::{generate_er, generate_fuse, ErParams, FuseParams, Hypergraph};
pub use orient::{orient, Orientation};
pub use peeler::{peel_rounds, peel_sequential, PeelResult};
pub use retrieval::{RetrievalParams, RetrievalStructure};
pub use threshold::{bracket_threshold, ThresholdBracket};
