//! Batch agglomerative clustering with average linkage.
//!
//! Average linkage over unit vectors is the dot product of cluster means, so
//! each active cluster is a dense row of summed unit vectors and the linkage
//! to every other cluster is one pass over the rows. Merges follow the
//! nearest-neighbour chain, which yields the greedy dendrogram for reducible
//! linkages such as average linkage.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::sparse::SparseVec;
use super::tree::{ClusterTree, NodeId};
use crate::kg::{EntityId, RelationId};
use crate::sim::EntityVectors;

const PAR_THRESHOLD: usize = 1 << 15;

/// Clusters the given entities. Entities with an empty vector are left out of
/// the tree and end up as singleton clusters after flat extraction.
pub fn hac(vectors: &EntityVectors, entities: impl IntoIterator<Item = EntityId>) -> ClusterTree {
    let mut groups: BTreeMap<&[RelationId], Vec<EntityId>> = BTreeMap::new();
    for e in entities {
        let dims = vectors.dims(e);
        if !dims.is_empty() {
            groups.entry(dims).or_default().push(e);
        }
    }
    let mut groups: Vec<(&[RelationId], Vec<EntityId>)> = groups.into_iter().collect();
    for g in &mut groups {
        g.1.sort_unstable();
    }
    groups.sort_by_key(|g| g.1[0]);

    let mut tree = ClusterTree::new();
    let mut initial = Vec::with_capacity(groups.len());
    // identical supports have linkage exactly 1 and merge before anything else
    for (dims, members) in groups {
        let unit = SparseVec::unit_binary(dims);
        let mut node = tree.new_leaf(members[0], unit.clone());
        for &e in &members[1..] {
            let leaf = tree.new_leaf(e, unit.clone());
            node = tree.new_internal(node, leaf);
        }
        initial.push(node);
    }
    let root = nn_chain(&mut tree, initial);
    tree.set_root(root);
    tree
}

/// Clusters arbitrary non-negative vectors (normalised here) with no grouping.
pub fn hac_points(points: Vec<(EntityId, SparseVec)>) -> ClusterTree {
    let mut tree = ClusterTree::new();
    let initial: Vec<NodeId> = points
        .into_iter()
        .map(|(e, v)| {
            let norm = v.dot(&v).sqrt();
            let unit = if norm > 0.0 {
                SparseVec::from_pairs(v.entries().iter().map(|&(d, x)| (d, x / norm)).collect())
            } else {
                v
            };
            tree.new_leaf(e, unit)
        })
        .collect();
    let root = nn_chain(&mut tree, initial);
    tree.set_root(root);
    tree
}

struct Active {
    dim: usize,
    rows: Vec<f64>,
    sizes: Vec<f64>,
    nodes: Vec<NodeId>,
    alive: Vec<bool>,
}

impl Active {
    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    fn linkage(&self, a: usize, b: usize) -> f64 {
        let dot: f64 = self.row(a).iter().zip(self.row(b)).map(|(x, y)| x * y).sum();
        dot / (self.sizes[a] * self.sizes[b])
    }

    /// Most similar live cluster to `a` other than `a` and `skip`;
    /// ties go to the lowest slot.
    fn best_other(&self, a: usize, skip: Option<usize>) -> Option<(usize, f64)> {
        let pick = |acc: Option<(usize, f64)>, c: usize| {
            if c == a || Some(c) == skip || !self.alive[c] {
                return acc;
            }
            let v = self.linkage(a, c);
            match acc {
                Some((_, best)) if v <= best => acc,
                _ => Some((c, v)),
            }
        };
        let n = self.nodes.len();
        if n * self.dim < PAR_THRESHOLD {
            return (0..n).fold(None, pick);
        }
        (0..n)
            .into_par_iter()
            .fold(|| None, pick)
            .reduce(
                || None,
                |x, y| match (x, y) {
                    (None, o) | (o, None) => o,
                    (Some(p), Some(q)) => {
                        if q.1 > p.1 || (q.1 == p.1 && q.0 < p.0) {
                            Some(q)
                        } else {
                            Some(p)
                        }
                    }
                },
            )
    }
}

fn nn_chain(tree: &mut ClusterTree, initial: Vec<NodeId>) -> Option<NodeId> {
    match initial.len() {
        0 => return None,
        1 => return Some(initial[0]),
        _ => {}
    }
    let dim = initial
        .iter()
        .filter_map(|&n| tree.node(n).sum.max_dim())
        .max()
        .map_or(1, |d| d as usize + 1);
    let mut active = Active {
        dim,
        rows: vec![0.0; dim * initial.len()],
        sizes: initial.iter().map(|&n| tree.node(n).size as f64).collect(),
        alive: vec![true; initial.len()],
        nodes: initial,
    };
    for (i, &n) in active.nodes.iter().enumerate() {
        tree.node(n).sum.write_dense(&mut active.rows[i * dim..(i + 1) * dim]);
    }

    let mut remaining = active.nodes.len();
    let mut chain: Vec<usize> = Vec::new();
    let mut next_start = 0;
    while remaining > 1 {
        if chain.is_empty() {
            while !active.alive[next_start] {
                next_start += 1;
            }
            chain.push(next_start);
        }
        let a = *chain.last().unwrap();
        let prev = chain.len().checked_sub(2).map(|i| chain[i]);
        let other = active.best_other(a, prev);
        let merge_with_prev = match (prev, other) {
            (Some(p), Some((_, v))) => active.linkage(a, p) >= v,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if merge_with_prev {
            let p = prev.unwrap();
            chain.truncate(chain.len() - 2);
            let (keep, gone) = (a.min(p), a.max(p));
            let merged = tree.new_internal(active.nodes[keep], active.nodes[gone]);
            let (lo, hi) = active.rows.split_at_mut(gone * dim);
            for (x, y) in lo[keep * dim..(keep + 1) * dim].iter_mut().zip(&hi[..dim]) {
                *x += *y;
            }
            active.sizes[keep] += active.sizes[gone];
            active.alive[gone] = false;
            active.nodes[keep] = merged;
            remaining -= 1;
        } else {
            chain.push(other.expect("at least two live clusters").0);
        }
    }
    let last = (0..active.nodes.len()).find(|&i| active.alive[i]).unwrap();
    Some(active.nodes[last])
}
