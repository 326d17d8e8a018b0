//! Per-cluster path statistics and query answering.
//!
//! For a cluster `c` and query relation `rq` the prior of a path type is its
//! share of all path instances that lead cluster members to their `rq`
//! answers, and its precision is the fraction of all its instances around the
//! members that end at such an answer. A query is answered by gathering path
//! types from similar entities that have `rq`, following each from the query
//! entity and adding `prior · precision` to every entity reached.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{extract_flat, hac, ClusterId, ClusterTree, FlatClustering};
use crate::config::Hyperparams;
use crate::error::Result;
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::paths::{traverse, EntitySlice, PathType};
use crate::sim::{knn_contextual, EntityVectors};

const SLICE_CHUNK: usize = 4096;

pub(crate) mod pairs {
    //! Maps stored as lists of pairs, for keys that are not strings.
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(
        map: &BTreeMap<K, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}

/// Instance counts of the paths that lead members of a cluster to their answers for one relation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationStats {
    #[serde(with = "pairs")]
    pub counts: BTreeMap<PathType, u64>,
    pub total: u64,
}

/// Count statistics of one cluster. Prior and precision are ratios of these.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Instances of each path type over all paths around the members.
    #[serde(with = "pairs")]
    pub totals: BTreeMap<PathType, u64>,
    #[serde(with = "pairs")]
    pub relations: BTreeMap<RelationId, RelationStats>,
}

impl ClusterStats {
    pub fn from_slices<'a>(slices: impl IntoIterator<Item = &'a EntitySlice>) -> Self {
        let mut stats = ClusterStats::default();
        for s in slices {
            stats.add(s);
        }
        stats
    }

    pub fn add(&mut self, slice: &EntitySlice) {
        for &(p, c) in &slice.totals {
            *self.totals.entry(p).or_insert(0) += c;
        }
        for (rq, list) in &slice.answers {
            if list.is_empty() {
                continue;
            }
            let rs = self.relations.entry(*rq).or_default();
            for &(p, c) in list {
                *rs.counts.entry(p).or_insert(0) += c;
                rs.total += c;
            }
        }
    }

    pub fn is_populated(&self, rq: RelationId) -> bool {
        self.relations.get(&rq).is_some_and(|rs| rs.total > 0)
    }

    /// Prior of `p` for `rq`; `None` outside the prior's support.
    pub fn prior(&self, rq: RelationId, p: PathType) -> Option<f64> {
        let rs = self.relations.get(&rq)?;
        let c = *rs.counts.get(&p)?;
        Some(c as f64 / rs.total as f64)
    }

    /// Precision of `p` for `rq`; `None` if no instance of `p` occurs around the members.
    pub fn precision(&self, rq: RelationId, p: PathType) -> Option<f64> {
        let total = *self.totals.get(&p)?;
        if total == 0 {
            return None;
        }
        let success = self
            .relations
            .get(&rq)
            .and_then(|rs| rs.counts.get(&p))
            .copied()
            .unwrap_or(0);
        Some(success as f64 / total as f64)
    }

    /// `prior · precision`, defined on the prior's support.
    pub fn weight(&self, rq: RelationId, p: PathType) -> Option<f64> {
        Some(self.prior(rq, p)? * self.precision(rq, p)?)
    }

    pub fn prior_distribution(&self, rq: RelationId) -> BTreeMap<PathType, f64> {
        match self.relations.get(&rq) {
            Some(rs) if rs.total > 0 => rs
                .counts
                .iter()
                .map(|(&p, &c)| (p, c as f64 / rs.total as f64))
                .collect(),
            _ => BTreeMap::new(),
        }
    }

    /// Precision of every path type that occurs around the members.
    pub fn precision_table(&self, rq: RelationId) -> BTreeMap<PathType, f64> {
        self.totals
            .keys()
            .filter_map(|&p| Some((p, self.precision(rq, p)?)))
            .collect()
    }
}

/// Path prior over the members of `cluster` for `rq`; empty if no member has an `rq` edge.
pub fn estimate_prior(kg: &KnowledgeGraph, cluster: &[EntityId], rq: RelationId, hyper: &Hyperparams) -> BTreeMap<PathType, f64> {
    cluster_stats(kg, cluster, hyper).prior_distribution(rq)
}

/// Path precision over the members of `cluster` for `rq`.
pub fn estimate_precision(
    kg: &KnowledgeGraph,
    cluster: &[EntityId],
    rq: RelationId,
    hyper: &Hyperparams,
) -> BTreeMap<PathType, f64> {
    cluster_stats(kg, cluster, hyper).precision_table(rq)
}

fn cluster_stats(kg: &KnowledgeGraph, cluster: &[EntityId], hyper: &Hyperparams) -> ClusterStats {
    let slices: Vec<EntitySlice> = cluster
        .iter()
        .map(|&e| EntitySlice::compute(kg, e, hyper.max_len, hyper.budget))
        .collect();
    ClusterStats::from_slices(&slices)
}

/// The first `n_paths` path types (in enumeration order) leading an entity to its answers, per relation.
pub type EntityCases = Vec<(RelationId, Vec<PathType>)>;

pub fn cases_from_slice(slice: &EntitySlice, n_paths: usize) -> EntityCases {
    slice
        .answers
        .iter()
        .filter(|(_, list)| !list.is_empty())
        .map(|(rq, list)| (*rq, list.iter().take(n_paths).map(|&(p, _)| p).collect()))
        .collect()
}

/// Scored candidates for one query, best first; ties by ascending entity id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedAnswers {
    pub query_entity: EntityId,
    pub query_relation: RelationId,
    pub scored: Vec<(EntityId, f64)>,
}

impl RankedAnswers {
    pub fn empty(query_entity: EntityId, query_relation: RelationId) -> Self {
        RankedAnswers {
            query_entity,
            query_relation,
            scored: Vec::new(),
        }
    }

    pub fn score_of(&self, e: EntityId) -> Option<f64> {
        self.scored.iter().find(|s| s.0 == e).map(|s| s.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbrModel {
    pub hyper: Hyperparams,
    pub vectors: EntityVectors,
    pub clustering: FlatClustering,
    /// Indexed by cluster id.
    pub stats: Vec<ClusterStats>,
    /// Indexed by entity id.
    pub cases: Vec<EntityCases>,
    /// Entities whose enumeration hit the state budget.
    pub truncated: Vec<EntityId>,
}

/// Summary numbers of a built model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub entities: usize,
    pub clusters: usize,
    pub singleton_clusters: usize,
    pub stat_tables: usize,
    pub prior_entries: usize,
    pub precision_entries: usize,
    pub truncated_entities: usize,
}

/// Builds the model from the train edges of `kg`.
pub fn build_model(kg: &KnowledgeGraph, hyper: &Hyperparams) -> Result<CbrModel> {
    Ok(build_with_tree(kg, hyper)?.0)
}

/// As [`build_model`], also returning the cluster tree.
pub fn build_with_tree(kg: &KnowledgeGraph, hyper: &Hyperparams) -> Result<(CbrModel, ClusterTree)> {
    hyper.validate()?;
    let start = Instant::now();
    let vectors = EntityVectors::from_kg(kg);
    let tree = hac(&vectors, kg.entities());
    let clustering = extract_flat(&tree, hyper.tau, kg.num_entities());
    tracing::info!(
        clusters = clustering.num_clusters(),
        secs = start.elapsed().as_secs_f64(),
        "clustering done"
    );
    let mut stats = vec![ClusterStats::default(); clustering.num_clusters()];
    let mut cases = vec![EntityCases::new(); kg.num_entities()];
    let mut truncated = Vec::new();
    let entities: Vec<EntityId> = kg.entities().filter(|&e| kg.out_degree(e) > 0).collect();
    for chunk in entities.chunks(SLICE_CHUNK) {
        let slices: Vec<EntitySlice> = chunk
            .par_iter()
            .map(|&e| EntitySlice::compute(kg, e, hyper.max_len, hyper.budget))
            .collect();
        for (&e, slice) in chunk.iter().zip(&slices) {
            stats[clustering.cluster_of(e).index()].add(slice);
            cases[e.index()] = cases_from_slice(slice, hyper.n_paths);
            if slice.truncated {
                truncated.push(e);
            }
        }
    }
    if !truncated.is_empty() {
        tracing::warn!(entities = truncated.len(), "path enumeration truncated by the state budget");
    }
    tracing::info!(secs = start.elapsed().as_secs_f64(), "statistics done");
    let model = CbrModel {
        hyper: hyper.clone(),
        vectors,
        clustering,
        stats,
        cases,
        truncated,
    };
    Ok((model, tree))
}

/// Assembles a model from per-entity slices indexed by entity id.
pub fn assemble(hyper: &Hyperparams, vectors: EntityVectors, clustering: FlatClustering, slices: &[EntitySlice]) -> CbrModel {
    let stats = clustering
        .clusters()
        .map(|(_, members)| ClusterStats::from_slices(members.iter().filter_map(|e| slices.get(e.index()))))
        .collect();
    let cases = (0..clustering.num_entities())
        .map(|i| slices.get(i).map(|s| cases_from_slice(s, hyper.n_paths)).unwrap_or_default())
        .collect();
    let truncated = (0..slices.len())
        .filter(|&i| slices[i].truncated)
        .map(|i| EntityId(i as u32))
        .collect();
    CbrModel {
        hyper: hyper.clone(),
        vectors,
        clustering,
        stats,
        cases,
        truncated,
    }
}

impl CbrModel {
    pub fn num_entities(&self) -> usize {
        self.clustering.num_entities()
    }

    pub fn cluster_of(&self, e: EntityId) -> Option<ClusterId> {
        (e.index() < self.clustering.num_entities()).then(|| self.clustering.cluster_of(e))
    }

    pub fn cluster_stats(&self, c: ClusterId) -> &ClusterStats {
        &self.stats[c.index()]
    }

    pub fn cases(&self, e: EntityId, rq: RelationId) -> &[PathType] {
        let Some(list) = self.cases.get(e.index()) else {
            return &[];
        };
        match list.binary_search_by_key(&rq, |c| c.0) {
            Ok(i) => &list[i].1,
            Err(_) => &[],
        }
    }

    /// Path types gathered for a query with the weight each contributes.
    ///
    /// Weights come from the query entity's cluster; a type without a prior
    /// there falls back to the cluster of the first contextual entity it came from.
    pub fn gather(&self, e1q: EntityId, rq: RelationId) -> Vec<(PathType, f64)> {
        let Some(home) = self.cluster_of(e1q) else {
            return Vec::new();
        };
        let Ok(context) = knn_contextual(&self.vectors, e1q, rq, self.hyper.k) else {
            return Vec::new();
        };
        let home = &self.stats[home.index()];
        let mut gathered: BTreeMap<PathType, f64> = BTreeMap::new();
        for &(ec, _) in &context.members {
            let own = self.cluster_of(ec).map(|c| &self.stats[c.index()]);
            for &p in self.cases(ec, rq) {
                if gathered.contains_key(&p) {
                    continue;
                }
                let w = home.weight(rq, p).or_else(|| own.and_then(|s| s.weight(rq, p)));
                if let Some(w) = w {
                    gathered.insert(p, w);
                }
            }
        }
        gathered.into_iter().collect()
    }

    /// Scores candidate answers for `(e1q, rq, ?)`.
    pub fn answer_query(&self, kg: &KnowledgeGraph, e1q: EntityId, rq: RelationId) -> RankedAnswers {
        let mut scores: HashMap<EntityId, f64> = HashMap::new();
        for (p, w) in self.gather(e1q, rq) {
            if w <= 0.0 {
                continue;
            }
            for t in traverse(kg, e1q, p) {
                *scores.entry(t).or_insert(0.0) += w;
            }
        }
        let mut scored: Vec<(EntityId, f64)> = scores.into_iter().collect();
        scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        RankedAnswers {
            query_entity: e1q,
            query_relation: rq,
            scored,
        }
    }

    pub fn summary(&self) -> ModelSummary {
        let tables = self.stats.iter().flat_map(|s| s.relations.values());
        ModelSummary {
            entities: self.num_entities(),
            clusters: self.clustering.num_clusters(),
            singleton_clusters: self.clustering.clusters().filter(|(_, m)| m.len() == 1).count(),
            stat_tables: self.stats.iter().map(|s| s.relations.len()).sum(),
            prior_entries: tables.map(|rs| rs.counts.len()).sum(),
            precision_entries: self.stats.iter().map(|s| s.totals.len()).sum(),
            truncated_entities: self.truncated.len(),
        }
    }
}
