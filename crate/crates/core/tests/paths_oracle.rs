mod common;

use std::collections::BTreeMap;

use cbr_core::kg::{EntityId, KnowledgeGraph, RelationId, Split, Triple};
use cbr_core::paths::{enumerate_paths, paths_to_answers, traverse, EntitySlice, PathType, DEFAULT_BUDGET};
use common::{answers, dfs_walks, edge_list, random_graph, rng};
use proptest::prelude::*;

fn as_seq(p: PathType) -> Vec<RelationId> {
    p.to_vec()
}

#[test]
fn enumeration_matches_dfs_on_random_graphs() {
    let mut r = rng(11);
    for _ in 0..200 {
        let kg = random_graph(&mut r, 8, 3, 25);
        let edges = edge_list(&kg);
        for n in 1..=3 {
            for e in kg.entities() {
                let want = dfs_walks(&edges, e, n);
                let got: BTreeMap<_, _> = enumerate_paths(&kg, e, n, DEFAULT_BUDGET)
                    .paths
                    .into_iter()
                    .map(|(p, end, c)| ((as_seq(p), end), c))
                    .collect();
                assert_eq!(got, want, "entity {e:?}, n = {n}");
            }
        }
    }
}

#[test]
fn answer_counts_match_dfs_incidences() {
    let mut r = rng(12);
    for _ in 0..200 {
        let kg = random_graph(&mut r, 7, 3, 25);
        let edges = edge_list(&kg);
        for e in kg.entities() {
            for rq in kg.relations() {
                let s = answers(&edges, e, rq);
                let got = paths_to_answers(&kg, e, rq, 3, DEFAULT_BUDGET);
                if s.is_empty() {
                    assert!(got.is_err());
                    continue;
                }
                let got = got.unwrap();
                let mut want: BTreeMap<Vec<RelationId>, u64> = BTreeMap::new();
                for ((seq, end), c) in dfs_walks(&edges, e, 3) {
                    if s.contains(&end) {
                        *want.entry(seq).or_insert(0) += c;
                    }
                }
                let got: BTreeMap<_, _> = got.into_iter().map(|(p, c)| (as_seq(p), c)).collect();
                assert_eq!(got, want);
                assert!(got.contains_key(&vec![rq]));
                let incidences: u64 = want.values().sum();
                let slice = EntitySlice::compute(&kg, e, 3, DEFAULT_BUDGET);
                assert_eq!(slice.relation_counts(rq).prior_total(), incidences);
            }
        }
    }
}

#[test]
fn traverse_is_projection_of_enumeration() {
    let mut r = rng(13);
    for _ in 0..100 {
        let kg = random_graph(&mut r, 8, 3, 25);
        for e in kg.entities() {
            let en = enumerate_paths(&kg, e, 3, DEFAULT_BUDGET);
            let mut ends: BTreeMap<PathType, Vec<EntityId>> = BTreeMap::new();
            for (p, end, _) in en.paths {
                ends.entry(p).or_default().push(end);
            }
            for (p, want) in ends {
                assert_eq!(traverse(&kg, e, p), want);
            }
        }
    }
}

#[test]
fn slice_totals_and_successes() {
    let mut r = rng(14);
    for _ in 0..100 {
        let kg = random_graph(&mut r, 8, 3, 25);
        let edges = edge_list(&kg);
        for e in kg.entities() {
            let slice = EntitySlice::compute(&kg, e, 2, DEFAULT_BUDGET);
            let walks = dfs_walks(&edges, e, 2);
            for rq in kg.relations() {
                let s = answers(&edges, e, rq);
                let counts = slice.relation_counts(rq);
                for (p, &(total, success)) in &counts.precision {
                    assert!(success <= total);
                    let seq = as_seq(*p);
                    let want_total: u64 = walks.iter().filter(|((q, _), _)| *q == seq).map(|(_, c)| c).sum();
                    let want_success: u64 = walks
                        .iter()
                        .filter(|((q, end), _)| *q == seq && s.contains(end))
                        .map(|(_, c)| c)
                        .sum();
                    assert_eq!((total, success), (want_total, want_success));
                }
            }
        }
    }
}

/// Same graph with entity ids permuted.
fn relabel(kg: &KnowledgeGraph, perm: &[u32]) -> KnowledgeGraph {
    let mut out = KnowledgeGraph::new();
    let mut by_new = vec![0u32; perm.len()];
    for (old, &new) in perm.iter().enumerate() {
        by_new[new as usize] = old as u32;
    }
    for &old in &by_new {
        out.intern_entity(kg.entity_label(EntityId(old))).unwrap();
    }
    for r in 0..kg.num_base_relations() {
        out.intern_relation(&kg.relation_label(RelationId::forward(r as u32))).unwrap();
    }
    for t in kg.partition(Split::Train) {
        let t = Triple::new(EntityId(perm[t.head.index()]), t.rel, EntityId(perm[t.tail.index()]));
        out.add_fact(Split::Train, t).unwrap();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_invariant_under_relabeling(seed in any::<u64>(), shuffle in any::<u64>()) {
        let mut r = rng(seed);
        let kg = random_graph(&mut r, 7, 3, 20);
        let mut perm: Vec<u32> = (0..kg.num_entities() as u32).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng(shuffle));
        let other = relabel(&kg, &perm);
        for e in kg.entities() {
            let e2 = EntityId(perm[e.index()]);
            let a = EntitySlice::compute(&kg, e, 3, DEFAULT_BUDGET);
            let b = EntitySlice::compute(&other, e2, 3, DEFAULT_BUDGET);
            prop_assert_eq!(&a.totals, &b.totals);
            prop_assert_eq!(&a.answers, &b.answers);
        }
    }

    #[test]
    fn path_type_round_trips(rels in proptest::collection::vec(0u32..60_000, 1..=7)) {
        let rels: Vec<RelationId> = rels.into_iter().map(RelationId).collect();
        let p = PathType::from_rels(&rels).unwrap();
        prop_assert_eq!(p.to_vec(), rels.clone());
        let json = serde_json::to_string(&p).unwrap();
        prop_assert_eq!(serde_json::from_str::<PathType>(&json).unwrap(), p);
    }
}
