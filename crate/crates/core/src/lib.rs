//! Random walks and cover times on random subgraphs of the hypercube.
//!
//! Each edge of `Q_d` is kept independently with probability `p`; the crate
//! samples such graphs, simulates walks on them, computes exact quantities on
//! small instances and evaluates the asymptotic predictions.

pub mod conductance;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod graph;
pub mod rng;
pub mod theory;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{HypercubeSubgraph, Probability};
pub use walk::{Start, VisitWindow, WalkConfig};
