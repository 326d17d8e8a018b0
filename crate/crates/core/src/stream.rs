//! Open-world replay: a seed graph grows batch by batch and the model is
//! updated incrementally (or rebuilt from scratch in oracle mode).

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{hac, FlatClustering, OnlineClusterer};
use crate::config::Hyperparams;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalFact, MetricsReport, TrueAnswers};
use crate::kg::{EntityId, KnowledgeGraph, Split, Triple};
use crate::model::{assemble, build_model, cases_from_slice, CbrModel, ClusterStats};
use crate::paths::EntitySlice;
use crate::sim::EntityVectors;

/// Assignment of every entity to the seed (stage 0) or to one of the batches (stages 1..).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamPlan {
    pub rng_seed: u64,
    pub num_batches: usize,
    stage: Vec<u32>,
}

/// JSON form of a plan, by entity label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub rng_seed: u64,
    pub seed: Vec<String>,
    pub batches: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub seed_fraction: f64,
    pub popular_fraction: f64,
    pub num_batches: usize,
    pub rng_seed: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            seed_fraction: 0.5,
            popular_fraction: 0.1,
            num_batches: 10,
            rng_seed: 0,
        }
    }
}

/// Seeds the graph with the most popular entities by train out-degree, tops
/// it up with random entities to the seed fraction and deals the rest into
/// batches after a seeded shuffle.
pub fn make_stream_plan(kg: &KnowledgeGraph, opts: &PlanOptions) -> Result<StreamPlan> {
    for (name, f) in [("seed_fraction", opts.seed_fraction), ("popular_fraction", opts.popular_fraction)] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidConfig(format!("{name} must be in (0, 1], got {f}")));
        }
    }
    if opts.num_batches == 0 {
        return Err(Error::InvalidConfig("at least one batch is required".into()));
    }
    let n = kg.num_entities();
    let n_popular = (opts.popular_fraction * n as f64).round() as usize;
    let n_seed = ((opts.seed_fraction * n as f64).round() as usize).max(n_popular);
    let forward_degree = |e: EntityId| -> usize {
        kg.out_edges(e)
            .iter()
            .filter(|g| !g.rel.is_inverse())
            .map(|g| g.targets.len())
            .sum()
    };
    let mut by_popularity: Vec<EntityId> = kg.entities().collect();
    by_popularity.sort_by_key(|&e| (std::cmp::Reverse(forward_degree(e)), e));
    let mut rest = by_popularity.split_off(n_popular.min(n));
    rest.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    rest.shuffle(&mut rng);
    let mut stage = vec![0u32; n];
    let extra = n_seed.saturating_sub(n_popular).min(rest.len());
    let remaining = &rest[extra..];
    let per = remaining.len().div_ceil(opts.num_batches).max(1);
    for (i, e) in remaining.iter().enumerate() {
        stage[e.index()] = (i / per + 1) as u32;
    }
    Ok(StreamPlan {
        rng_seed: opts.rng_seed,
        num_batches: opts.num_batches,
        stage,
    })
}

impl StreamPlan {
    pub fn num_entities(&self) -> usize {
        self.stage.len()
    }

    /// 0 for seed entities, `i + 1` for batch `i`.
    pub fn stage_of(&self, e: EntityId) -> u32 {
        self.stage[e.index()]
    }

    /// Stage at which a fact becomes available: when both endpoints are present.
    pub fn fact_stage(&self, t: Triple) -> u32 {
        self.stage_of(t.head).max(self.stage_of(t.tail))
    }

    pub fn entities_at(&self, stage: u32) -> Vec<EntityId> {
        (0..self.stage.len())
            .filter(|&i| self.stage[i] == stage)
            .map(|i| EntityId(i as u32))
            .collect()
    }

    pub fn facts_at(&self, kg: &KnowledgeGraph, split: Split, stage: u32) -> Vec<Triple> {
        kg.partition(split)
            .iter()
            .copied()
            .filter(|&t| self.fact_stage(t) == stage)
            .collect()
    }

    pub fn to_file(&self, kg: &KnowledgeGraph) -> PlanFile {
        let labels = |s: u32| -> Vec<String> {
            self.entities_at(s)
                .into_iter()
                .map(|e| kg.entity_label(e).to_owned())
                .collect()
        };
        PlanFile {
            rng_seed: self.rng_seed,
            seed: labels(0),
            batches: (1..=self.num_batches as u32).map(labels).collect(),
        }
    }

    /// Reads a plan back; it must cover every entity of `kg` exactly once.
    pub fn from_file(kg: &KnowledgeGraph, file: &PlanFile) -> Result<Self> {
        let mut stage: Vec<Option<u32>> = vec![None; kg.num_entities()];
        let groups = std::iter::once(&file.seed).chain(&file.batches);
        for (s, labels) in groups.enumerate() {
            for label in labels {
                let e = kg
                    .entity(label)
                    .ok_or_else(|| Error::InvalidConfig(format!("plan names unknown entity `{label}`")))?;
                if stage[e.index()].replace(s as u32).is_some() {
                    return Err(Error::InvalidConfig(format!("plan lists `{label}` twice")));
                }
            }
        }
        let stage = stage
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| Error::InvalidConfig(format!("plan omits entity `{}`", kg.entity_label(EntityId(i as u32)))))
            })
            .collect::<Result<_>>()?;
        Ok(StreamPlan {
            rng_seed: file.rng_seed,
            num_batches: file.batches.len(),
            stage,
        })
    }
}

/// Entities on a cycle of length at most `n + 1` through some added edge,
/// i.e. on a walk of length at most `n` from its tail back to its head, plus
/// the endpoints. `kg_after` must already contain the added edges.
pub fn affected_entities(kg_after: &KnowledgeGraph, added: &[Triple], n: usize) -> BTreeSet<EntityId> {
    let mut out = BTreeSet::new();
    for t in added {
        out.insert(t.head);
        out.insert(t.tail);
        let from_tail = bounded_distances(kg_after, t.tail, n);
        let from_head = bounded_distances(kg_after, t.head, n);
        for (e, dv) in &from_tail {
            if let Some(du) = from_head.get(e) {
                if dv + du <= n {
                    out.insert(*e);
                }
            }
        }
    }
    out
}

fn bounded_distances(kg: &KnowledgeGraph, src: EntityId, n: usize) -> HashMap<EntityId, usize> {
    let mut dist = HashMap::from([(src, 0)]);
    let mut queue = VecDeque::from([src]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == n {
            continue;
        }
        for g in kg.out_edges(x) {
            for &y in &g.targets {
                if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(y) {
                    slot.insert(d + 1);
                    queue.push_back(y);
                }
            }
        }
    }
    dist
}

/// What one batch changed.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct UpdateDelta {
    pub new_entities: BTreeSet<EntityId>,
    /// Existing entities incident to an added edge.
    pub modified_entities: BTreeSet<EntityId>,
    pub added_edges: Vec<Triple>,
    /// Entities whose path statistics must be recounted.
    pub affected: BTreeSet<EntityId>,
}

/// Work done by one incremental update.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub new_entities: usize,
    pub modified_entities: usize,
    pub edges_added: usize,
    pub affected_entities: usize,
    /// Per-entity slices recounted (affected plus entities that changed cluster).
    pub recounted_entities: usize,
    pub clusters_resummed: usize,
}

/// A model kept current under fact insertions, with cached per-entity slices.
#[derive(Clone, Debug)]
pub struct OnlineModel {
    kg: KnowledgeGraph,
    model: CbrModel,
    clusterer: OnlineClusterer,
    slices: Vec<EntitySlice>,
}

impl OnlineModel {
    pub fn build(kg: KnowledgeGraph, hyper: &Hyperparams) -> Result<Self> {
        hyper.validate()?;
        let vectors = EntityVectors::from_kg(&kg);
        let tree = hac(&vectors, kg.entities());
        let clusterer = OnlineClusterer::from_tree(tree, &vectors, hyper.tau);
        let slices: Vec<EntitySlice> = (0..kg.num_entities())
            .into_par_iter()
            .map(|i| EntitySlice::compute(&kg, EntityId(i as u32), hyper.max_len, hyper.budget))
            .collect();
        let clustering = clusterer.flat(kg.num_entities());
        let model = assemble(hyper, vectors, clustering, &slices);
        Ok(OnlineModel {
            kg,
            model,
            clusterer,
            slices,
        })
    }

    pub fn kg(&self) -> &KnowledgeGraph {
        &self.kg
    }

    pub fn model(&self) -> &CbrModel {
        &self.model
    }

    pub fn clusterer(&self) -> &OnlineClusterer {
        &self.clusterer
    }

    /// Statistics recounted from scratch for every entity, on the current clustering.
    pub fn full_recount(&self) -> CbrModel {
        let hyper = &self.model.hyper;
        let slices: Vec<EntitySlice> = (0..self.kg.num_entities())
            .into_par_iter()
            .map(|i| EntitySlice::compute(&self.kg, EntityId(i as u32), hyper.max_len, hyper.budget))
            .collect();
        assemble(hyper, self.model.vectors.clone(), self.model.clustering.clone(), &slices)
    }

    /// Adds train facts (whose entities must already be in the vocabulary)
    /// and updates vectors, clusters and statistics.
    pub fn apply_batch(&mut self, new_entities: &[EntityId], facts: &[Triple]) -> Result<(UpdateDelta, UpdateStats)> {
        let hyper = self.model.hyper.clone();
        let new: BTreeSet<EntityId> = new_entities.iter().copied().collect();
        let mut added = Vec::with_capacity(facts.len());
        for &t in facts {
            if self.kg.add_fact(Split::Train, t)? {
                added.push(t);
            }
        }
        let modified: BTreeSet<EntityId> = added
            .iter()
            .flat_map(|t| [t.head, t.tail])
            .filter(|e| !new.contains(e))
            .collect();
        let affected = affected_entities(&self.kg, &added, hyper.max_len);

        // (a) vectors
        let n = self.kg.num_entities();
        let mut changed_vectors = BTreeSet::new();
        for &e in new.iter().chain(&modified) {
            if self.model.vectors.refresh(&self.kg, e) {
                changed_vectors.insert(e);
            }
        }

        // (b) clusters: delete changed entities, then insert them with the new ones
        for &e in &changed_vectors {
            if self.clusterer.contains(e) {
                self.clusterer.delete(e)?;
            }
        }
        for &e in &changed_vectors {
            self.clusterer.insert(e, self.model.vectors.dims(e))?;
        }
        let old_clustering = std::mem::replace(&mut self.model.clustering, self.clusterer.flat(n));
        let clustering = &self.model.clustering;

        // (c) statistics
        let moved: BTreeSet<EntityId> = clustering
            .clusters()
            .filter(|(_, members)| !existed_before(&old_clustering, members))
            .flat_map(|(_, members)| members.iter().copied())
            .collect();
        let recount: Vec<EntityId> = affected.union(&moved).copied().collect();
        if self.slices.len() < n {
            self.slices.resize(n, EntitySlice::default());
        }
        let fresh: Vec<EntitySlice> = recount
            .par_iter()
            .map(|&e| EntitySlice::compute(&self.kg, e, hyper.max_len, hyper.budget))
            .collect();
        if self.model.cases.len() < n {
            self.model.cases.resize(n, Vec::new());
        }
        for (&e, slice) in recount.iter().zip(fresh) {
            self.model.cases[e.index()] = cases_from_slice(&slice, hyper.n_paths);
            self.slices[e.index()] = slice;
        }
        let recounted: BTreeSet<EntityId> = recount.iter().copied().collect();
        let mut old_stats = std::mem::take(&mut self.model.stats);
        let mut resummed = 0;
        let stats: Vec<ClusterStats> = clustering
            .clusters()
            .map(|(_, members)| {
                let reusable = existed_before(&old_clustering, members) && !members.iter().any(|e| recounted.contains(e));
                if reusable {
                    std::mem::take(&mut old_stats[old_clustering.cluster_of(members[0]).index()])
                } else {
                    resummed += 1;
                    ClusterStats::from_slices(members.iter().map(|e| &self.slices[e.index()]))
                }
            })
            .collect();
        self.model.stats = stats;
        self.model.truncated = (0..n)
            .filter(|&i| self.slices[i].truncated)
            .map(|i| EntityId(i as u32))
            .collect();

        let update = UpdateStats {
            new_entities: new.len(),
            modified_entities: modified.len(),
            edges_added: added.len(),
            affected_entities: affected.len(),
            recounted_entities: recount.len(),
            clusters_resummed: resummed,
        };
        let delta = UpdateDelta {
            new_entities: new,
            modified_entities: modified,
            added_edges: added,
            affected,
        };
        Ok((delta, update))
    }
}

/// Whether `members` was already a cluster of `old`.
fn existed_before(old: &FlatClustering, members: &[EntityId]) -> bool {
    members[0].index() < old.num_entities() && old.members(old.cluster_of(members[0])) == members
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    Online,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSet {
    Full,
    New,
}

/// One line of the stream log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub batch: usize,
    pub mode: StreamMode,
    pub eval_set: EvalSet,
    pub metrics: MetricsReport,
    pub update: UpdateStats,
    pub num_train_edges: usize,
}

#[derive(Clone, Debug)]
pub struct StreamOptions {
    pub mode: StreamMode,
    pub split: Split,
    pub with_head: bool,
}

/// Builds the seed model, replays every batch and evaluates after the seed
/// and after each batch on all facts available so far (`full`) and on the
/// facts that became available at that step (`new`).
pub fn run_stream(
    kg: &KnowledgeGraph,
    plan: &StreamPlan,
    hyper: &Hyperparams,
    opts: &StreamOptions,
    mut on_batch: impl FnMut(&BatchReport),
) -> Result<Vec<BatchReport>> {
    if plan.num_entities() != kg.num_entities() {
        return Err(Error::InvalidConfig(format!(
            "plan covers {} entities, graph has {}",
            plan.num_entities(),
            kg.num_entities()
        )));
    }
    let truth = TrueAnswers::from_kg(kg);
    let mut current = KnowledgeGraph::with_vocabulary_of(kg);
    for t in plan.facts_at(kg, Split::Train, 0) {
        current.add_fact(Split::Train, t)?;
    }
    let mut online = match opts.mode {
        StreamMode::Online => Some(OnlineModel::build(current.clone(), hyper)?),
        StreamMode::Oracle => None,
    };
    let mut reports = Vec::new();
    for batch in 0..=plan.num_batches {
        let start = Instant::now();
        let mut update = UpdateStats::default();
        if batch > 0 {
            let stage = batch as u32;
            let facts = plan.facts_at(kg, Split::Train, stage);
            let entities = plan.entities_at(stage);
            match online.as_mut() {
                Some(o) => update = o.apply_batch(&entities, &facts)?.1,
                None => {
                    for &t in &facts {
                        if current.add_fact(Split::Train, t)? {
                            update.edges_added += 1;
                        }
                    }
                    update.new_entities = entities.len();
                }
            }
        }
        let oracle_model;
        let (model, graph) = match online.as_ref() {
            Some(o) => (o.model(), o.kg()),
            None => {
                oracle_model = build_model(&current, hyper)?;
                update.recounted_entities = current.num_entities();
                update.clusters_resummed = oracle_model.clustering.num_clusters();
                (&oracle_model, &current)
            }
        };
        let eval_facts: Vec<(u32, Triple)> = kg
            .partition(opts.split)
            .iter()
            .map(|&t| (plan.fact_stage(t), t))
            .filter(|&(s, _)| s as usize <= batch)
            .collect();
        for set in [EvalSet::Full, EvalSet::New] {
            let facts: Vec<EvalFact> = eval_facts
                .iter()
                .filter(|(s, _)| set == EvalSet::Full || *s as usize == batch)
                .map(|&(_, t)| Some(t))
                .collect();
            let (mut metrics, _) = evaluate(model, graph, &facts, opts.with_head, &truth);
            metrics.batch = Some(batch.to_string());
            let report = BatchReport {
                batch,
                mode: opts.mode,
                eval_set: set,
                metrics,
                update: update.clone(),
                num_train_edges: graph.num_train_edges(),
            };
            on_batch(&report);
            reports.push(report);
        }
        tracing::info!(batch, secs = start.elapsed().as_secs_f64(), "batch done");
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_graph;

    fn chain_graph(n: usize) -> KnowledgeGraph {
        let mut kg = KnowledgeGraph::new();
        for i in 0..n {
            kg.add_labeled(Split::Train, &format!("e{i}"), "r", &format!("e{}", (i + 1) % n))
                .unwrap();
        }
        kg
    }

    #[test]
    fn plan_sizes_and_determinism() {
        let kg = chain_graph(10);
        let opts = PlanOptions {
            rng_seed: 7,
            ..Default::default()
        };
        let plan = make_stream_plan(&kg, &opts).unwrap();
        assert_eq!(plan.entities_at(0).len(), 5);
        let batched: usize = (1..=10).map(|s| plan.entities_at(s).len()).sum();
        assert_eq!(batched, 5);
        assert_eq!(plan, make_stream_plan(&kg, &opts).unwrap());
        let other = make_stream_plan(&kg, &PlanOptions { rng_seed: 8, ..opts.clone() }).unwrap();
        assert_eq!(other.entities_at(0).len(), 5);
    }

    #[test]
    fn popular_entities_are_seeded() {
        let mut kg = chain_graph(10);
        for i in 1..10 {
            kg.add_labeled(Split::Train, "e3", "s", &format!("e{i}")).unwrap();
        }
        let plan = make_stream_plan(&kg, &PlanOptions::default()).unwrap();
        assert_eq!(plan.stage_of(kg.entity("e3").unwrap()), 0);
    }

    #[test]
    fn seed_facts_stay_in_seed() {
        let kg = chain_graph(10);
        let plan = make_stream_plan(&kg, &PlanOptions::default()).unwrap();
        for t in kg.partition(Split::Train) {
            let s = plan.fact_stage(*t);
            assert_eq!(s, plan.stage_of(t.head).max(plan.stage_of(t.tail)));
            if plan.stage_of(t.head) == 0 && plan.stage_of(t.tail) == 0 {
                assert_eq!(s, 0);
            }
        }
    }

    #[test]
    fn plan_file_round_trip() {
        let kg = chain_graph(12);
        let plan = make_stream_plan(&kg, &PlanOptions { num_batches: 3, ..Default::default() }).unwrap();
        let file = plan.to_file(&kg);
        let json = serde_json::to_string(&file).unwrap();
        let back = StreamPlan::from_file(&kg, &serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, plan);
        let mut broken = file.clone();
        broken.seed.pop();
        assert!(StreamPlan::from_file(&kg, &broken).is_err());
    }

    #[test]
    fn plan_rejects_bad_options() {
        let kg = chain_graph(4);
        for opts in [
            PlanOptions { seed_fraction: 0.0, ..Default::default() },
            PlanOptions { popular_fraction: 1.5, ..Default::default() },
            PlanOptions { num_batches: 0, ..Default::default() },
        ] {
            assert!(make_stream_plan(&kg, &opts).is_err());
        }
    }

    #[test]
    fn affected_on_triangle() {
        let mut kg = KnowledgeGraph::new();
        kg.add_labeled(Split::Train, "b", "x", "s").unwrap();
        kg.add_labeled(Split::Train, "s", "y", "a").unwrap();
        kg.add_labeled(Split::Train, "s", "y", "far").unwrap();
        let edge = Triple::new(kg.entity("a").unwrap(), kg.intern_relation("r").unwrap(), kg.entity("b").unwrap());
        kg.add_fact(Split::Train, edge).unwrap();
        let got = affected_entities(&kg, &[edge], 2);
        let want: BTreeSet<_> = ["a", "b", "s"].iter().map(|l| kg.entity(l).unwrap()).collect();
        assert_eq!(got, want);
        // too short to close the cycle
        let got = affected_entities(&kg, &[edge], 1);
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn affected_on_toy_includes_inst() {
        let mut kg = toy_graph();
        let lives = kg.intern_relation("lives_in").unwrap();
        let edge = Triple::new(kg.entity("a2").unwrap(), lives, kg.entity("us").unwrap());
        kg.add_fact(Split::Train, edge).unwrap();
        let got = affected_entities(&kg, &[edge], 2);
        let want: BTreeSet<_> = ["a2", "us", "inst"].iter().map(|l| kg.entity(l).unwrap()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_batch_changes_nothing() {
        let kg = toy_graph();
        let mut online = OnlineModel::build(kg, &Hyperparams::new(2, 10, 2, 0.5)).unwrap();
        let before = online.model().clone();
        let (delta, stats) = online.apply_batch(&[], &[]).unwrap();
        assert!(delta.affected.is_empty());
        assert_eq!(stats.recounted_entities, 0);
        assert_eq!(online.model(), &before);
    }

    #[test]
    fn isolated_newcomer_leaves_other_clusters_alone() {
        let full = {
            let mut kg = toy_graph();
            kg.add_labeled(Split::Train, "new", "unrelated", "other").unwrap();
            kg
        };
        let mut seed = KnowledgeGraph::with_vocabulary_of(&full);
        for t in toy_graph().partition(Split::Train) {
            seed.add_fact(Split::Train, *t).unwrap();
        }
        let hyper = Hyperparams::new(2, 10, 2, 0.5);
        let mut online = OnlineModel::build(seed, &hyper).unwrap();
        let before = online.model().clone();
        let new = [full.entity("new").unwrap(), full.entity("other").unwrap()];
        let t = full.partition(Split::Train).last().copied().unwrap();
        online.apply_batch(&new, &[t]).unwrap();
        let after = online.model();
        assert_eq!(after.clustering.num_clusters(), before.clustering.num_clusters());
        for (c, members) in before.clustering.clusters() {
            if members.iter().all(|e| !new.contains(e)) {
                let c2 = after.clustering.cluster_of(members[0]);
                assert_eq!(after.cluster_stats(c2), before.cluster_stats(c));
            }
        }
        assert!(online.clusterer().contains(new[0]));
    }

    #[test]
    fn stream_seed_reports_match_between_modes() {
        let mut kg = chain_graph(16);
        for i in 0..16 {
            kg.add_labeled(Split::Test, &format!("e{i}"), "r2", &format!("e{}", (i + 2) % 16))
                .unwrap();
        }
        let plan = make_stream_plan(&kg, &PlanOptions { num_batches: 3, ..Default::default() }).unwrap();
        let hyper = Hyperparams::new(3, 10, 3, 0.5);
        let run = |mode| {
            let opts = StreamOptions {
                mode,
                split: Split::Test,
                with_head: true,
            };
            run_stream(&kg, &plan, &hyper, &opts, |_| {}).unwrap()
        };
        let online = run(StreamMode::Online);
        let oracle = run(StreamMode::Oracle);
        assert_eq!(online.len(), 8);
        assert_eq!(online[0].metrics, oracle[0].metrics);
        assert_eq!(online[1].metrics, oracle[1].metrics);
        assert_eq!(online, run(StreamMode::Online));
    }
}
