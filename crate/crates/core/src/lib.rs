//! Case-based reasoning for knowledge-graph completion.
//!
//! Queries `(e, r, ?)` are answered by retrieving entities similar to `e` that
//! have relation `r`, collecting the relation paths that lead them to their
//! `r` answers, and following those paths from `e`. Each path type is weighted
//! by a prior and a precision estimated from counts over the cluster of
//! similar entities that `e` belongs to. There is no training step; new facts
//! and entities are absorbed by incremental updates.

pub mod cluster;
pub mod config;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod kg;
pub mod model;
pub mod paths;
pub mod sim;
pub mod snapshot;
pub mod stream;

pub use config::Hyperparams;
pub use error::{Error, Result};
pub use kg::{EntityId, KnowledgeGraph, RelationId, Split, Triple};
pub use model::{build_model, CbrModel, RankedAnswers};
