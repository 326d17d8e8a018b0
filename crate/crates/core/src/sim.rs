//! Sparse binary entity representations and contextual-entity retrieval.
//!
//! An entity is represented by the set of relation types (inverses included)
//! on its outgoing train edges. Similarity is cosine over those binary vectors.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};

/// Non-zero coordinates of an entity's `{0,1}^|R|` vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityVector {
    pub entity: EntityId,
    pub dims: Vec<RelationId>,
}

/// `|u ∩ v| / sqrt(|u|·|v|)` for sorted, duplicate-free supports; 0 if either is empty.
pub fn cosine_sim(u: &[RelationId], v: &[RelationId]) -> f64 {
    if u.is_empty() || v.is_empty() {
        return 0.0;
    }
    let shared = intersection_size(u, v);
    if shared == 0 {
        return 0.0;
    }
    shared as f64 / ((u.len() * v.len()) as f64).sqrt()
}

pub(crate) fn intersection_size<T: Ord>(u: &[T], v: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < u.len() && j < v.len() {
        match u[i].cmp(&v[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Entity vectors for one graph snapshot plus an inverted index
/// relation → entities having that relation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityVectors {
    dims: Vec<Vec<RelationId>>,
    index: Vec<Vec<EntityId>>,
}

impl EntityVectors {
    pub fn from_kg(kg: &KnowledgeGraph) -> Self {
        let dims: Vec<Vec<RelationId>> = kg
            .entities()
            .map(|e| kg.out_edges(e).iter().map(|g| g.rel).collect())
            .collect();
        let mut index = vec![Vec::new(); kg.num_relations()];
        for (e, ds) in dims.iter().enumerate() {
            for r in ds {
                index[r.index()].push(EntityId(e as u32));
            }
        }
        EntityVectors { dims, index }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dims(&self, e: EntityId) -> &[RelationId] {
        self.dims.get(e.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vector(&self, e: EntityId) -> EntityVector {
        EntityVector {
            entity: e,
            dims: self.dims(e).to_vec(),
        }
    }

    /// Entities with at least one outgoing `r` edge, ascending.
    pub fn entities_with(&self, r: RelationId) -> &[EntityId] {
        self.index.get(r.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn similarity(&self, a: EntityId, b: EntityId) -> f64 {
        cosine_sim(self.dims(a), self.dims(b))
    }

    /// Re-reads the support of `e` from the graph. Returns true if it changed.
    pub fn refresh(&mut self, kg: &KnowledgeGraph, e: EntityId) -> bool {
        if self.dims.len() < kg.num_entities() {
            self.dims.resize(kg.num_entities(), Vec::new());
        }
        if self.index.len() < kg.num_relations() {
            self.index.resize(kg.num_relations(), Vec::new());
        }
        let new: Vec<RelationId> = kg.out_edges(e).iter().map(|g| g.rel).collect();
        let old = std::mem::replace(&mut self.dims[e.index()], new.clone());
        if old == new {
            return false;
        }
        for r in &old {
            let list = &mut self.index[r.index()];
            if let Ok(pos) = list.binary_search(&e) {
                list.remove(pos);
            }
        }
        for r in &new {
            let list = &mut self.index[r.index()];
            if let Err(pos) = list.binary_search(&e) {
                list.insert(pos, e);
            }
        }
        true
    }
}

/// The retrieved cases for a query: entities most similar to the query entity
/// among those that have the query relation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextualSet {
    pub query_entity: EntityId,
    pub query_relation: RelationId,
    pub members: Vec<(EntityId, f64)>,
}

/// Sorts by descending score, then ascending id, and keeps the first `k`.
pub(crate) fn top_k(mut scored: Vec<(EntityId, f64)>, k: usize) -> Vec<(EntityId, f64)> {
    let order = |a: &(EntityId, f64), b: &(EntityId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if scored.len() > k && k > 0 {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(order);
    scored.truncate(k);
    scored
}

/// Exact k-nearest-neighbour retrieval over the entities that have `rq`,
/// excluding the query entity itself.
pub fn knn_contextual(vectors: &EntityVectors, e1q: EntityId, rq: RelationId, k: usize) -> Result<ContextualSet> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let query = vectors.dims(e1q);
    let scored: Vec<(EntityId, f64)> = vectors
        .entities_with(rq)
        .iter()
        .filter(|&&e| e != e1q)
        .map(|&e| (e, cosine_sim(query, vectors.dims(e))))
        .collect();
    if scored.is_empty() {
        return Err(Error::EmptyContext(rq));
    }
    Ok(ContextualSet {
        query_entity: e1q,
        query_relation: rq,
        members: top_k(scored, k),
    })
}
