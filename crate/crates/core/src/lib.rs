//! Cell-graph classification with a GIN model, four post-hoc graph
//! explainers plus a random baseline, nuclear concept attributes, and
//! concept-based class-separability metrics for ranking explainers.

pub mod error;
pub mod graph;
pub mod io;
pub mod nn;

pub use error::{Error, Result};
pub mod concepts;
pub mod explain;
pub mod metrics;
