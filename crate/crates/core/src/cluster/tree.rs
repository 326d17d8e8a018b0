use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::sparse::{linkage_from_sums, SparseVec};
use crate::kg::EntityId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 2]>,
    pub entity: Option<EntityId>,
    /// Average linkage between the two children; 1.0 for leaves.
    pub linkage: f64,
    pub size: usize,
    pub(crate) sum: SparseVec,
    alive: bool,
}

/// Binary cluster tree stored in an arena. Internal nodes cache the sum of
/// their members' unit vectors so average linkage is a single dot product.
#[derive(Clone, Debug, Default)]
pub struct ClusterTree {
    nodes: Vec<TreeNode>,
    free: Vec<NodeId>,
    root: Option<NodeId>,
    leaf_of: HashMap<EntityId, NodeId>,
}

impl ClusterTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.index()]
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn leaf(&self, e: EntityId) -> Option<NodeId> {
        self.leaf_of.get(&e).copied()
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.leaf_of.contains_key(&e)
    }

    /// Entities of all leaves, ascending.
    pub fn leaf_entities(&self) -> Vec<EntityId> {
        let mut v: Vec<_> = self.leaf_of.keys().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn sibling(&self, id: NodeId) -> Option<NodeId> {
        let p = self.node(id).parent?;
        let [a, b] = self.node(p).children.expect("parent has children");
        Some(if a == id { b } else { a })
    }

    pub fn is_ancestor(&self, anc: NodeId, mut id: NodeId) -> bool {
        while let Some(p) = self.node(id).parent {
            if p == anc {
                return true;
            }
            id = p;
        }
        false
    }

    /// Entities below `id`, ascending.
    pub fn leaves_under(&self, id: NodeId) -> Vec<EntityId> {
        let mut out = Vec::with_capacity(self.node(id).size);
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            let node = self.node(n);
            match node.children {
                Some([a, b]) => {
                    stack.push(a);
                    stack.push(b);
                }
                None => out.extend(node.entity),
            }
        }
        out.sort_unstable();
        out
    }

    /// Average linkage between the member sets of two nodes.
    pub fn linkage(&self, a: NodeId, b: NodeId) -> f64 {
        let (na, nb) = (self.node(a), self.node(b));
        linkage_from_sums(na.sum.dot(&nb.sum), na.size, nb.size)
    }

    fn alloc(&mut self, node: TreeNode) -> NodeId {
        match self.free.pop() {
            Some(id) => {
                self.nodes[id.index()] = node;
                id
            }
            None => {
                self.nodes.push(node);
                NodeId(self.nodes.len() as u32 - 1)
            }
        }
    }

    /// Detached leaf for `e`.
    pub(crate) fn new_leaf(&mut self, e: EntityId, unit: SparseVec) -> NodeId {
        let id = self.alloc(TreeNode {
            parent: None,
            children: None,
            entity: Some(e),
            linkage: 1.0,
            size: 1,
            sum: unit,
            alive: true,
        });
        self.leaf_of.insert(e, id);
        id
    }

    /// Detached internal node over two detached roots.
    pub(crate) fn new_internal(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let id = self.alloc(TreeNode {
            parent: None,
            children: Some([a, b]),
            entity: None,
            linkage: 0.0,
            size: 0,
            sum: SparseVec::default(),
            alive: true,
        });
        self.nodes[a.index()].parent = Some(id);
        self.nodes[b.index()].parent = Some(id);
        self.refresh(id);
        id
    }

    pub(crate) fn set_root(&mut self, id: Option<NodeId>) {
        if let Some(r) = id {
            self.nodes[r.index()].parent = None;
        }
        self.root = id;
    }

    pub(crate) fn refresh(&mut self, id: NodeId) {
        let Some([a, b]) = self.node(id).children else {
            return;
        };
        let (na, nb) = (self.node(a), self.node(b));
        let size = na.size + nb.size;
        let sum = na.sum.add(&nb.sum);
        let linkage = linkage_from_sums(na.sum.dot(&nb.sum), na.size, nb.size);
        let node = &mut self.nodes[id.index()];
        node.size = size;
        node.sum = sum;
        node.linkage = linkage;
    }

    pub(crate) fn refresh_to_root(&mut self, from: NodeId) {
        let mut cur = Some(from);
        while let Some(id) = cur {
            self.refresh(id);
            cur = self.node(id).parent;
        }
    }

    /// Makes `new` take the place of child `old` under `parent`.
    pub(crate) fn replace_child(&mut self, parent: NodeId, old: NodeId, new: NodeId) {
        let children = self.nodes[parent.index()].children.as_mut().expect("internal node");
        for c in children.iter_mut() {
            if *c == old {
                *c = new;
            }
        }
        self.nodes[new.index()].parent = Some(parent);
    }

    /// Exchanges the positions of two subtrees that are not nested.
    pub(crate) fn swap_subtrees(&mut self, x: NodeId, y: NodeId) {
        let px = self.node(x).parent.expect("x has a parent");
        let py = self.node(y).parent.expect("y has a parent");
        if px == py {
            return;
        }
        self.replace_child(px, x, y);
        self.replace_child(py, y, x);
    }

    /// Puts `leaf` next to `target`, creating a new parent in target's place.
    pub(crate) fn attach_as_sibling(&mut self, target: NodeId, leaf: NodeId) -> NodeId {
        let parent = self.node(target).parent;
        let joined = self.new_internal(target, leaf);
        match parent {
            Some(p) => {
                self.replace_child(p, target, joined);
                self.refresh_to_root(p);
            }
            None => self.set_root(Some(joined)),
        }
        joined
    }

    /// Removes the subtree at `leaf` from its position, splicing its sibling into
    /// the parent's place. The subtree stays allocated and detached.
    pub(crate) fn detach(&mut self, leaf: NodeId) {
        let Some(p) = self.node(leaf).parent else {
            self.root = None;
            return;
        };
        let s = self.sibling(leaf).expect("has sibling");
        match self.node(p).parent {
            Some(g) => {
                self.replace_child(g, p, s);
                self.refresh_to_root(g);
            }
            None => self.set_root(Some(s)),
        }
        self.nodes[leaf.index()].parent = None;
        self.release(p);
    }

    /// Frees a detached leaf and forgets its entity.
    pub(crate) fn drop_leaf(&mut self, leaf: NodeId) {
        if let Some(e) = self.node(leaf).entity {
            self.leaf_of.remove(&e);
        }
        self.release(leaf);
    }

    fn release(&mut self, id: NodeId) {
        let n = &mut self.nodes[id.index()];
        n.alive = false;
        n.parent = None;
        n.children = None;
        n.entity = None;
        n.sum = SparseVec::default();
        self.free.push(id);
    }

    /// Checks structural invariants; returns the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let Some(root) = self.root else {
            return if self.leaf_of.is_empty() {
                Ok(())
            } else {
                Err("empty tree with registered leaves".into())
            };
        };
        if self.node(root).parent.is_some() {
            return Err("root has a parent".into());
        }
        let mut seen_leaves = 0;
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let n = self.node(id);
            if !n.alive {
                return Err(format!("dead node {id:?} reachable"));
            }
            match (n.children, n.entity) {
                (Some([a, b]), None) => {
                    for c in [a, b] {
                        if self.node(c).parent != Some(id) {
                            return Err(format!("child {c:?} of {id:?} has wrong parent"));
                        }
                    }
                    let size = self.node(a).size + self.node(b).size;
                    if size != n.size {
                        return Err(format!("size mismatch at {id:?}"));
                    }
                    let l = self.linkage(a, b);
                    if !(0.0..=1.0).contains(&n.linkage) || (l - n.linkage).abs() > 1e-9 {
                        return Err(format!("stale linkage at {id:?}: {} vs {}", n.linkage, l));
                    }
                    stack.push(a);
                    stack.push(b);
                }
                (None, Some(e)) => {
                    if self.leaf_of.get(&e) != Some(&id) || n.size != 1 {
                        return Err(format!("leaf {id:?} for {e:?} not registered"));
                    }
                    seen_leaves += 1;
                }
                _ => return Err(format!("node {id:?} is neither leaf nor binary")),
            }
        }
        if seen_leaves != self.leaf_of.len() {
            return Err(format!(
                "{} reachable leaves but {} registered",
                seen_leaves,
                self.leaf_of.len()
            ));
        }
        Ok(())
    }
}
