//! Random graphs and brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cbr_core::cluster::{extract_flat, hac, pairwise_f1, OnlineClusterer};
use cbr_core::kg::{EntityId, KnowledgeGraph, RelationId, Split, Triple};
use cbr_core::model::CbrModel;
use cbr_core::sim::EntityVectors;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random multigraph with up to `max_facts` train facts (twice as many directed edges).
pub fn random_graph(rng: &mut impl Rng, max_entities: usize, max_rels: usize, max_facts: usize) -> KnowledgeGraph {
    let n = rng.gen_range(2..=max_entities);
    let r = rng.gen_range(1..=max_rels);
    let m = rng.gen_range(1..=max_facts);
    let mut kg = KnowledgeGraph::new();
    for i in 0..n {
        kg.intern_entity(&format!("e{i}")).unwrap();
    }
    for j in 0..r {
        kg.intern_relation(&format!("r{j}")).unwrap();
    }
    for _ in 0..m {
        let h = EntityId(rng.gen_range(0..n as u32));
        let t = EntityId(rng.gen_range(0..n as u32));
        let rel = RelationId::forward(rng.gen_range(0..r as u32));
        kg.add_fact(Split::Train, Triple::new(h, rel, t)).unwrap();
    }
    kg
}

/// Directed edges (both directions) rebuilt from the train partition.
pub fn edge_list(kg: &KnowledgeGraph) -> Vec<(EntityId, RelationId, EntityId)> {
    let mut out = Vec::new();
    for t in kg.partition(Split::Train) {
        out.push((t.head, t.rel, t.tail));
        out.push((t.tail, RelationId(t.rel.0 ^ 1), t.head));
    }
    out
}

pub type RelSeq = Vec<RelationId>;

/// Every walk of length 1..=n from `src`, as (relation sequence, end) with the
/// number of distinct edge sequences. A step straight back over the edge just
/// used is not allowed.
pub fn dfs_walks(edges: &[(EntityId, RelationId, EntityId)], src: EntityId, n: usize) -> BTreeMap<(RelSeq, EntityId), u64> {
    fn go(
        edges: &[(EntityId, RelationId, EntityId)],
        cur: EntityId,
        last: Option<(RelationId, EntityId)>,
        seq: &mut RelSeq,
        n: usize,
        out: &mut BTreeMap<(RelSeq, EntityId), u64>,
    ) {
        if seq.len() == n {
            return;
        }
        for &(h, r, t) in edges {
            if h != cur {
                continue;
            }
            if let Some((lr, prev)) = last {
                if r.0 == lr.0 ^ 1 && t == prev {
                    continue;
                }
            }
            seq.push(r);
            *out.entry((seq.clone(), t)).or_insert(0) += 1;
            go(edges, t, Some((r, cur)), seq, n, out);
            seq.pop();
        }
    }
    let mut out = BTreeMap::new();
    go(edges, src, None, &mut Vec::new(), n, &mut out);
    out
}

pub fn answers(edges: &[(EntityId, RelationId, EntityId)], e: EntityId, r: RelationId) -> BTreeSet<EntityId> {
    edges.iter().filter(|x| x.0 == e && x.1 == r).map(|x| x.2).collect()
}

/// Reference prior and precision of a cluster for `rq`, straight from walk counts.
pub struct RefStats {
    pub prior: BTreeMap<RelSeq, f64>,
    pub precision: BTreeMap<RelSeq, f64>,
}

pub fn ref_stats(edges: &[(EntityId, RelationId, EntityId)], members: &[EntityId], rq: RelationId, n: usize) -> RefStats {
    let mut hit: BTreeMap<RelSeq, u64> = BTreeMap::new();
    let mut all: BTreeMap<RelSeq, u64> = BTreeMap::new();
    for &e in members {
        let s = answers(edges, e, rq);
        for ((seq, end), c) in dfs_walks(edges, e, n) {
            *all.entry(seq.clone()).or_insert(0) += c;
            if s.contains(&end) {
                *hit.entry(seq).or_insert(0) += c;
            }
        }
    }
    let total: u64 = hit.values().sum();
    RefStats {
        prior: hit.iter().map(|(p, &c)| (p.clone(), c as f64 / total as f64)).collect(),
        precision: all
            .iter()
            .map(|(p, &t)| (p.clone(), *hit.get(p).unwrap_or(&0) as f64 / t as f64))
            .collect(),
    }
}

/// Builds vectors with the given supports: entity `i` gets an edge of each
/// relation id in `supports[i]` to a shared hub entity, which comes last.
pub fn vectors_from(supports: &[Vec<u32>]) -> EntityVectors {
    let mut kg = KnowledgeGraph::new();
    let max_dim = supports.iter().flatten().copied().max().unwrap_or(0);
    for b in 0..=max_dim / 2 {
        kg.intern_relation(&format!("r{b}")).unwrap();
    }
    for i in 0..=supports.len() {
        kg.intern_entity(&format!("e{i}")).unwrap();
    }
    let hub = EntityId(supports.len() as u32);
    for (i, s) in supports.iter().enumerate() {
        for &d in s {
            kg.add_fact(Split::Train, Triple::new(EntityId(i as u32), RelationId(d), hub))
                .unwrap();
        }
    }
    EntityVectors::from_kg(&kg)
}

/// Brute-force scoring of a query given the model's cluster assignment.
pub fn reference_scores(kg: &KnowledgeGraph, model: &CbrModel, e1q: EntityId, rq: RelationId) -> BTreeMap<EntityId, f64> {
    let h = &model.hyper;
    let edges = edge_list(kg);
    let support = |e: EntityId| -> BTreeSet<RelationId> { edges.iter().filter(|x| x.0 == e).map(|x| x.1).collect() };
    let cos = |a: &BTreeSet<RelationId>, b: &BTreeSet<RelationId>| {
        if a.is_empty() || b.is_empty() {
            0.0
        } else {
            a.intersection(b).count() as f64 / ((a.len() * b.len()) as f64).sqrt()
        }
    };
    let q = support(e1q);
    let mut pool: Vec<(EntityId, f64)> = kg
        .entities()
        .filter(|&e| e != e1q && !answers(&edges, e, rq).is_empty())
        .map(|e| (e, cos(&q, &support(e))))
        .collect();
    pool.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    pool.truncate(h.k);

    let cluster_members = |e: EntityId| model.clustering.members(model.clustering.cluster_of(e)).to_vec();
    let weight = |members: &[EntityId], p: &RelSeq| -> Option<f64> {
        let r = ref_stats(&edges, members, rq, h.max_len);
        Some(r.prior.get(p)? * r.precision.get(p)?)
    };
    let home = cluster_members(e1q);
    let mut gathered: BTreeMap<RelSeq, f64> = BTreeMap::new();
    for (ec, _) in pool {
        let s = answers(&edges, ec, rq);
        let mut types: Vec<RelSeq> = dfs_walks(&edges, ec, h.max_len)
            .into_keys()
            .filter(|(_, end)| s.contains(end))
            .map(|(p, _)| p)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        // shorter types first, then by relation ids
        types.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        types.truncate(h.n_paths);
        for p in types {
            if gathered.contains_key(&p) {
                continue;
            }
            let w = weight(&home, &p).or_else(|| weight(&cluster_members(ec), &p));
            if let Some(w) = w {
                gathered.insert(p, w);
            }
        }
    }
    let walks = dfs_walks(&edges, e1q, h.max_len);
    let mut scores: BTreeMap<EntityId, f64> = BTreeMap::new();
    for (p, w) in gathered {
        let ends: BTreeSet<EntityId> = walks.keys().filter(|(q, _)| *q == p).map(|(_, e)| *e).collect();
        for e in ends {
            *scores.entry(e).or_insert(0.0) += w;
        }
    }
    scores.retain(|_, s| *s > 0.0);
    scores
}

/// Random nonempty supports over `dims` dimensions.
pub fn random_supports(r: &mut impl Rng, n: usize, dims: u32) -> Vec<Vec<u32>> {
    (0..n)
        .map(|_| {
            let mut s: Vec<u32> = (0..dims).filter(|_| r.gen_bool(0.35)).collect();
            if s.is_empty() {
                s.push(r.gen_range(0..dims));
            }
            s
        })
        .collect()
}

/// Points scattered around a few random prototypes by flipping bits.
pub fn noisy_prototypes(r: &mut impl Rng, n: usize, dims: u32, protos: usize, flip: f64) -> Vec<Vec<u32>> {
    let centres = random_supports(r, protos, dims);
    (0..n)
        .map(|_| {
            let c: BTreeSet<u32> = centres[r.gen_range(0..protos)].iter().copied().collect();
            let mut s: Vec<u32> = (0..dims).filter(|d| c.contains(d) != r.gen_bool(flip)).collect();
            if s.is_empty() {
                s.push(r.gen_range(0..dims));
            }
            s
        })
        .collect()
}

/// Pairwise F1 of online insertion (random order) against batch clustering.
pub fn online_vs_batch_f1(seed: u64, tau: f64) -> f64 {
    let mut r = rng(seed);
    let n = 64;
    let supports = noisy_prototypes(&mut r, n, 16, 6, 0.08);
    let v = vectors_from(&supports);
    let ids: Vec<EntityId> = (0..n as u32).map(EntityId).collect();
    let batch = extract_flat(&hac(&v, ids.clone()), tau, n);
    let mut order = ids;
    order.shuffle(&mut r);
    let mut oc = OnlineClusterer::new(tau);
    for e in order {
        oc.insert(e, v.dims(e)).unwrap();
    }
    oc.tree().validate().unwrap();
    pairwise_f1(&oc.flat(n), &batch)
}
