use serde::{Deserialize, Serialize};

use super::tree::{ClusterTree, NodeId};
use crate::kg::EntityId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterId(pub u32);

impl ClusterId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A partition of all entities. Cluster ids are assigned in order of each
/// cluster's smallest member, so they only depend on the partition itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatClustering {
    assignment: Vec<ClusterId>,
    clusters: Vec<Vec<EntityId>>,
}

impl FlatClustering {
    /// Builds a partition of `0..num_entities` from disjoint groups; uncovered
    /// entities become singletons.
    pub fn from_groups(num_entities: usize, groups: Vec<Vec<EntityId>>) -> Self {
        let mut covered = vec![false; num_entities];
        let mut clusters: Vec<Vec<EntityId>> = Vec::with_capacity(groups.len());
        for mut g in groups {
            if g.is_empty() {
                continue;
            }
            g.sort_unstable();
            for e in &g {
                assert!(!covered[e.index()], "entity {e:?} appears in two groups");
                covered[e.index()] = true;
            }
            clusters.push(g);
        }
        for (i, c) in covered.iter().enumerate() {
            if !c {
                clusters.push(vec![EntityId(i as u32)]);
            }
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        let mut assignment = vec![ClusterId(0); num_entities];
        for (cid, members) in clusters.iter().enumerate() {
            for e in members {
                assignment[e.index()] = ClusterId(cid as u32);
            }
        }
        FlatClustering { assignment, clusters }
    }

    pub fn singletons(num_entities: usize) -> Self {
        Self::from_groups(num_entities, Vec::new())
    }

    pub fn num_entities(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_of(&self, e: EntityId) -> ClusterId {
        self.assignment[e.index()]
    }

    pub fn members(&self, c: ClusterId) -> &[EntityId] {
        &self.clusters[c.index()]
    }

    pub fn clusters(&self) -> impl Iterator<Item = (ClusterId, &[EntityId])> {
        self.clusters
            .iter()
            .enumerate()
            .map(|(i, m)| (ClusterId(i as u32), m.as_slice()))
    }

    /// Verifies that clusters partition `0..num_entities` and agree with the assignment.
    pub fn check_partition(&self) -> Result<(), String> {
        let mut seen = vec![false; self.assignment.len()];
        for (cid, members) in self.clusters() {
            if members.is_empty() {
                return Err(format!("{cid:?} is empty"));
            }
            for &e in members {
                if seen[e.index()] {
                    return Err(format!("{e:?} in more than one cluster"));
                }
                seen[e.index()] = true;
                if self.cluster_of(e) != cid {
                    return Err(format!("assignment of {e:?} disagrees with {cid:?}"));
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(format!("entity {i} not covered")),
            None => Ok(()),
        }
    }
}

/// Nodes where a top-down search stops: leaves and nodes with linkage above `tau`.
pub fn stop_nodes(tree: &ClusterTree, tau: f64) -> Vec<NodeId> {
    let mut result = Vec::new();
    let Some(root) = tree.root() else {
        return result;
    };
    let mut frontier = std::collections::VecDeque::from([root]);
    while let Some(n) = frontier.pop_front() {
        let node = tree.node(n);
        match node.children {
            Some(children) if node.linkage <= tau => frontier.extend(children),
            _ => result.push(n),
        }
    }
    result
}

/// Threshold-based flat clustering of a tree; entities not in the tree are singletons.
pub fn extract_flat(tree: &ClusterTree, tau: f64, num_entities: usize) -> FlatClustering {
    let groups = stop_nodes(tree, tau).into_iter().map(|n| tree.leaves_under(n)).collect();
    FlatClustering::from_groups(num_entities, groups)
}
