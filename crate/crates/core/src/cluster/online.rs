//! Online maintenance of the cluster tree.
//!
//! Insertion puts a new leaf next to its nearest leaf by cosine, then applies
//! local rotations while they raise the linkage of the node holding the new
//! leaf, then grafts the leaf or one of its ancestors next to a better
//! flat-cluster root where that raises linkage.
//! Deletion removes the leaf and splices its sibling into the parent's place.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::flat::{extract_flat, stop_nodes, FlatClustering};
use super::sparse::SparseVec;
use super::tree::{ClusterTree, NodeId};
use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId};
use crate::sim::{cosine_sim, EntityVectors};

const EPS: f64 = 1e-12;
const MAX_GRAFTS: usize = 64;

#[derive(Clone, Debug)]
pub struct OnlineClusterer {
    tree: ClusterTree,
    tau: f64,
    dims: HashMap<EntityId, Vec<RelationId>>,
    index: BTreeMap<RelationId, BTreeSet<EntityId>>,
}

impl OnlineClusterer {
    pub fn new(tau: f64) -> Self {
        Self::from_tree(ClusterTree::new(), &EntityVectors::default(), tau)
    }

    /// Wraps an existing tree whose leaves have the given vectors.
    pub fn from_tree(tree: ClusterTree, vectors: &EntityVectors, tau: f64) -> Self {
        let mut this = OnlineClusterer {
            tree,
            tau,
            dims: HashMap::new(),
            index: BTreeMap::new(),
        };
        for e in this.tree.leaf_entities() {
            this.register(e, vectors.dims(e).to_vec());
        }
        this
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.tree.contains(e)
    }

    pub fn flat(&self, num_entities: usize) -> FlatClustering {
        extract_flat(&self.tree, self.tau, num_entities)
    }

    fn register(&mut self, e: EntityId, dims: Vec<RelationId>) {
        for r in &dims {
            self.index.entry(*r).or_default().insert(e);
        }
        self.dims.insert(e, dims);
    }

    fn unregister(&mut self, e: EntityId) {
        if let Some(dims) = self.dims.remove(&e) {
            for r in dims {
                if let Some(set) = self.index.get_mut(&r) {
                    set.remove(&e);
                    if set.is_empty() {
                        self.index.remove(&r);
                    }
                }
            }
        }
    }

    /// Nearest existing leaf by cosine; ties go to the smaller entity id.
    fn nearest_leaf(&self, dims: &[RelationId]) -> Option<(EntityId, f64)> {
        let mut candidates = BTreeSet::new();
        for r in dims {
            if let Some(set) = self.index.get(r) {
                candidates.extend(set.iter().copied());
            }
        }
        let mut best: Option<(EntityId, f64)> = None;
        for e in candidates {
            let s = cosine_sim(dims, &self.dims[&e]);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((e, s));
            }
        }
        best
    }

    /// Inserts `e`. An empty vector is not placed in the tree (singleton cluster).
    pub fn insert(&mut self, e: EntityId, dims: &[RelationId]) -> Result<()> {
        if self.tree.contains(e) {
            return Err(Error::DuplicateLeaf(e));
        }
        if dims.is_empty() {
            return Ok(());
        }
        let nearest = self.nearest_leaf(dims);
        let leaf = self.tree.new_leaf(e, SparseVec::unit_binary(dims));
        self.register(e, dims.to_vec());
        let Some(root) = self.tree.root() else {
            self.tree.set_root(Some(leaf));
            return Ok(());
        };
        // nothing shares a dimension: the whole tree is equally far away
        let target = match nearest {
            Some((n, s)) if s > 0.0 => self.tree.leaf(n).expect("indexed entity is a leaf"),
            _ => root,
        };
        self.tree.attach_as_sibling(target, leaf);
        self.rotate_up(leaf);
        self.graft(leaf);
        Ok(())
    }

    /// Removes the leaf of `e`.
    pub fn delete(&mut self, e: EntityId) -> Result<()> {
        let leaf = self.tree.leaf(e).ok_or(Error::UnknownLeaf(e))?;
        self.tree.detach(leaf);
        self.tree.drop_leaf(leaf);
        self.unregister(e);
        Ok(())
    }

    /// Starting at the parent of `leaf`, regroups a child with the aunt when that
    /// strictly raises the linkage of the lower node, moving up while it helps.
    fn rotate_up(&mut self, leaf: NodeId) {
        let Some(mut v) = self.tree.node(leaf).parent else {
            return;
        };
        while let Some(g) = self.tree.node(v).parent {
            let aunt = self.tree.sibling(v).expect("non-root has sibling");
            let [c1, c2] = self.tree.node(v).children.expect("internal");
            let current = self.tree.node(v).linkage;
            let with_c1 = self.tree.linkage(c1, aunt);
            let with_c2 = self.tree.linkage(c2, aunt);
            // keeping `keep` below with the aunt sends `out` up one level
            let (best, out) = if with_c1 >= with_c2 { (with_c1, c2) } else { (with_c2, c1) };
            if best <= current + EPS {
                break;
            }
            self.tree.swap_subtrees(out, aunt);
            self.tree.refresh(v);
            self.tree.refresh_to_root(g);
            v = g;
        }
    }

    /// Walks from `leaf` up to the root of its flat cluster. At each node on the
    /// way, the node moves next to the flat-cluster root it links to best when
    /// that linkage beats the one to its current sibling.
    fn graft(&mut self, leaf: NodeId) {
        let mut v = leaf;
        for _ in 0..MAX_GRAFTS {
            let Some(sibling) = self.tree.sibling(v) else {
                return;
            };
            let stops = stop_nodes(&self.tree, self.tau);
            let current = self.tree.linkage(v, sibling);
            let mut best: Option<(NodeId, f64)> = None;
            for &w in &stops {
                if w == v || w == sibling || self.tree.is_ancestor(w, v) || self.tree.is_ancestor(v, w) {
                    continue;
                }
                let l = self.tree.linkage(v, w);
                if best.is_none_or(|(_, b)| l > b) {
                    best = Some((w, l));
                }
            }
            v = match best {
                Some((w, l)) if l > current + EPS => {
                    self.tree.detach(v);
                    self.tree.attach_as_sibling(w, v)
                }
                _ if stops.contains(&v) => return,
                _ => match self.tree.node(v).parent {
                    Some(p) => p,
                    None => return,
                },
            };
        }
    }
}

/// Pairwise F1 between two partitions of the same entities: pairs clustered
/// together in `predicted` scored against pairs clustered together in `reference`.
/// Two all-singleton partitions score 1.
pub fn pairwise_f1(predicted: &FlatClustering, reference: &FlatClustering) -> f64 {
    let pairs = |c: &FlatClustering| -> u64 { c.clusters().map(|(_, m)| (m.len() * (m.len() - 1) / 2) as u64).sum() };
    let mut both = 0u64;
    for (_, members) in predicted.clusters() {
        let mut counts: HashMap<_, u64> = HashMap::new();
        for &e in members {
            *counts.entry(reference.cluster_of(e)).or_default() += 1;
        }
        both += counts.values().map(|&n| n * n.saturating_sub(1) / 2).sum::<u64>();
    }
    let (p, r) = (pairs(predicted), pairs(reference));
    if p == 0 && r == 0 {
        return 1.0;
    }
    if both == 0 {
        return 0.0;
    }
    let precision = both as f64 / p as f64;
    let recall = both as f64 / r as f64;
    2.0 * precision * recall / (precision + recall)
}
