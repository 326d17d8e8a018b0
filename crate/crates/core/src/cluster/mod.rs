//! Entity clustering: batch average-linkage HAC, threshold-based flat
//! extraction and an online tree supporting insert/delete.

mod flat;
mod hac;
mod online;
mod sparse;
mod tree;

pub use flat::{extract_flat, stop_nodes, ClusterId, FlatClustering};
pub use hac::{hac, hac_points};
pub use online::{pairwise_f1, OnlineClusterer};
pub use sparse::SparseVec;
pub use tree::{ClusterTree, NodeId, TreeNode};

use crate::kg::EntityId;
use crate::sim::EntityVectors;

/// Mean pairwise cosine similarity between two entity sets, computed pair by pair.
pub fn avg_linkage(a: &[EntityId], b: &[EntityId], vectors: &EntityVectors) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let total: f64 = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .map(|(x, y)| vectors.similarity(x, y))
        .sum();
    total / (a.len() * b.len()) as f64
}
