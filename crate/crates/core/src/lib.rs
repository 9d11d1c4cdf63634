//! Enumerate every instance of a small pattern graph in a large data graph
//! with a simulated single round of map-reduce.
//!
//! The pipeline: turn the pattern into a small set of conjunctive queries
//! that together discover each instance exactly once ([`samplecq`], and the
//! specialized run-sequence construction for cycles in [`cyclecq`]); pick
//! per-variable shares that minimize communication ([`plan`]); route edge
//! copies to reducers and evaluate the queries with exact cost accounting
//! ([`sim`]); and run serial enumerators whose reducer-side total work stays
//! within a constant factor of a standalone run ([`enumerate`]).

pub mod cq;
pub mod cyclecq;
pub mod enumerate;
pub mod error;
pub mod graph;
pub mod plan;
pub mod samplecq;
pub mod sim;

pub use error::{Error, Result};
