//! Bounded-length path enumeration and the per-entity counts behind the path
//! prior and precision estimates.
//!
//! Paths may revisit entities, but a step `x -r-> y` is never followed by
//! `y -r⁻¹-> x`, i.e. walking straight back over the edge just used.
//! Multiplicities count distinct edge instantiations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};

/// Longest supported path type.
pub const MAX_PATH_LEN: usize = 7;

/// Default cap on enumeration states per source entity.
pub const DEFAULT_BUDGET: usize = 1_000_000;

const LEN_SHIFT: u32 = 120;
const REL_BITS: u32 = 16;

/// A relation sequence of length `1..=MAX_PATH_LEN`, packed into an integer.
///
/// The ordering is by length first, then lexicographic by relation id, which is
/// the order a breadth-first enumeration discovers types in.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathType(u128);

impl PathType {
    const EMPTY: PathType = PathType(0);

    fn shift(i: usize) -> u32 {
        LEN_SHIFT - REL_BITS * (i as u32 + 1)
    }

    pub fn single(r: RelationId) -> Self {
        PathType::EMPTY.push(r)
    }

    pub fn from_rels(rels: &[RelationId]) -> Result<Self> {
        if rels.is_empty() || rels.len() > MAX_PATH_LEN {
            return Err(Error::PathLength(rels.len()));
        }
        Ok(rels.iter().fold(PathType::EMPTY, |p, &r| p.push(r)))
    }

    pub fn len(self) -> usize {
        (self.0 >> LEN_SHIFT) as usize
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    /// Appends a relation. Panics past `MAX_PATH_LEN` or for ids ≥ 2^16.
    pub fn push(self, r: RelationId) -> Self {
        let n = self.len();
        assert!(n < MAX_PATH_LEN, "path type longer than {MAX_PATH_LEN}");
        assert!(r.0 < (1 << REL_BITS), "relation id {} too large to pack", r.0);
        let body = self.0 & ((1u128 << LEN_SHIFT) - 1);
        PathType(((n as u128 + 1) << LEN_SHIFT) | body | ((r.0 as u128) << Self::shift(n)))
    }

    pub fn get(self, i: usize) -> RelationId {
        assert!(i < self.len());
        RelationId(((self.0 >> Self::shift(i)) & 0xffff) as u32)
    }

    pub fn last(self) -> Option<RelationId> {
        self.len().checked_sub(1).map(|i| self.get(i))
    }

    pub fn rels(self) -> impl Iterator<Item = RelationId> {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn to_vec(self) -> Vec<RelationId> {
        self.rels().collect()
    }

    pub fn display(self, kg: &KnowledgeGraph) -> String {
        self.rels().map(|r| kg.relation_label(r)).collect::<Vec<_>>().join(" / ")
    }
}

impl fmt::Debug for PathType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rels().map(|r| r.0)).finish()
    }
}

impl Serialize for PathType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.rels().map(|r| r.0))
    }
}

impl<'de> Deserialize<'de> for PathType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<u32>::deserialize(d)?;
        if ids.iter().any(|&r| r >= 1 << REL_BITS) {
            return Err(serde::de::Error::custom("relation id too large for a path type"));
        }
        let rels: Vec<RelationId> = ids.into_iter().map(RelationId).collect();
        PathType::from_rels(&rels).map_err(serde::de::Error::custom)
    }
}

/// All `(type, end, multiplicity)` triples for paths of length `1..=n` from one entity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathEnumeration {
    /// Sorted by `(type, end)`.
    pub paths: Vec<(PathType, EntityId, u64)>,
    /// Set when the state budget stopped the search before length `n`.
    pub truncated: bool,
    /// Longest path length fully enumerated.
    pub depth: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct State {
    ty: PathType,
    cur: EntityId,
    prev: EntityId,
}

/// Breadth-first enumeration over train edges. `budget` caps the number of
/// `(type, end, predecessor)` search states; a level that would exceed it is
/// dropped whole and the result is flagged as truncated.
pub fn enumerate_paths(kg: &KnowledgeGraph, e: EntityId, n: usize, budget: usize) -> PathEnumeration {
    let mut out = PathEnumeration::default();
    if n == 0 || !kg.contains_entity(e) {
        return out;
    }
    let mut level: Vec<(State, u64)> = Vec::new();
    for g in kg.out_edges(e) {
        for &t in &g.targets {
            level.push((
                State {
                    ty: PathType::single(g.rel),
                    cur: t,
                    prev: e,
                },
                1,
            ));
        }
    }
    level.sort_unstable_by_key(|s| s.0);
    let mut used = level.len();
    if used > budget {
        out.truncated = true;
        return out;
    }
    let mut all: Vec<(PathType, EntityId, u64)> = Vec::new();
    let mut depth = 1;
    loop {
        all.extend(level.iter().map(|(s, c)| (s.ty, s.cur, *c)));
        out.depth = depth;
        if depth == n || level.is_empty() {
            break;
        }
        let mut next: Vec<(State, u64)> = Vec::new();
        let mut over = false;
        'expand: for &(s, count) in &level {
            let back = s.ty.last().expect("non-empty").inverse();
            for g in kg.out_edges(s.cur) {
                for &t in &g.targets {
                    if g.rel == back && t == s.prev {
                        continue;
                    }
                    next.push((
                        State {
                            ty: s.ty.push(g.rel),
                            cur: t,
                            prev: s.cur,
                        },
                        count,
                    ));
                }
                if used + next.len() > budget.saturating_mul(2) {
                    over = true;
                    break 'expand;
                }
            }
        }
        let next = merge_states(next);
        if over || used + next.len() > budget {
            out.truncated = true;
            break;
        }
        used += next.len();
        level = next;
        depth += 1;
    }
    all.sort_unstable_by_key(|p| (p.0, p.1));
    let mut merged: Vec<(PathType, EntityId, u64)> = Vec::with_capacity(all.len());
    for (ty, end, c) in all {
        match merged.last_mut() {
            Some(last) if last.0 == ty && last.1 == end => last.2 = last.2.saturating_add(c),
            _ => merged.push((ty, end, c)),
        }
    }
    out.paths = merged;
    out
}

fn merge_states(mut v: Vec<(State, u64)>) -> Vec<(State, u64)> {
    v.sort_unstable_by_key(|s| s.0);
    let mut out: Vec<(State, u64)> = Vec::with_capacity(v.len());
    for (s, c) in v {
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 = last.1.saturating_add(c),
            _ => out.push((s, c)),
        }
    }
    out
}

/// End entities reachable from `e` by following `p` over train edges.
pub fn traverse(kg: &KnowledgeGraph, e: EntityId, p: PathType) -> Vec<EntityId> {
    if !kg.contains_entity(e) || p.is_empty() {
        return Vec::new();
    }
    // (current, previous) pairs; the predecessor is needed to forbid echoes
    let mut frontier: Vec<(EntityId, EntityId)> = vec![(e, e)];
    let mut back: Option<RelationId> = None;
    for r in p.rels() {
        let mut next = Vec::new();
        for &(cur, prev) in &frontier {
            for &t in kg.targets(cur, r) {
                if back == Some(r) && t == prev {
                    continue;
                }
                next.push((t, cur));
            }
        }
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            return Vec::new();
        }
        frontier = next;
        back = Some(r.inverse());
    }
    let mut ends: Vec<EntityId> = frontier.into_iter().map(|(c, _)| c).collect();
    ends.dedup();
    ends
}

/// Instance counts of `P_n(e, rq)`: paths from `e` ending at some `t` with `(e, rq, t)` a train edge.
pub fn paths_to_answers(
    kg: &KnowledgeGraph,
    e: EntityId,
    rq: RelationId,
    n: usize,
    budget: usize,
) -> Result<BTreeMap<PathType, u64>> {
    let answers = kg.neighbors(e, rq)?;
    if answers.is_empty() {
        return Err(Error::NoAnswers(e, rq));
    }
    let mut out = BTreeMap::new();
    for (ty, end, c) in enumerate_paths(kg, e, n, budget).paths {
        if answers.binary_search(&end).is_ok() {
            *out.entry(ty).or_insert(0) += c;
        }
    }
    Ok(out)
}

/// Cacheable per-entity path statistics. Sums of these over the members of a
/// cluster give the prior and precision estimates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySlice {
    /// Instances of each type over all paths from the entity, sorted by type.
    pub totals: Vec<(PathType, u64)>,
    /// For each relation the entity has: instances of each type ending at one
    /// of that relation's answers. Sorted by relation, then type.
    pub answers: Vec<(RelationId, Vec<(PathType, u64)>)>,
    pub truncated: bool,
}

/// Prior numerators and precision (total, success) pairs of one entity for one relation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationCounts {
    pub prior: BTreeMap<PathType, u64>,
    pub precision: BTreeMap<PathType, (u64, u64)>,
}

impl RelationCounts {
    /// Total number of `P_n(e, rq)` instances (the entity's share of the prior denominator).
    pub fn prior_total(&self) -> u64 {
        self.prior.values().sum()
    }
}

impl EntitySlice {
    pub fn compute(kg: &KnowledgeGraph, e: EntityId, n: usize, budget: usize) -> Self {
        let enumeration = enumerate_paths(kg, e, n, budget);
        let mut end_rels: HashMap<EntityId, Vec<usize>> = HashMap::new();
        let edges = kg.out_edges(e);
        for (slot, g) in edges.iter().enumerate() {
            for &t in &g.targets {
                end_rels.entry(t).or_default().push(slot);
            }
        }
        let mut answers: Vec<(RelationId, Vec<(PathType, u64)>)> =
            edges.iter().map(|g| (g.rel, Vec::new())).collect();
        let mut totals: Vec<(PathType, u64)> = Vec::new();
        for &(ty, end, c) in &enumeration.paths {
            match totals.last_mut() {
                Some(last) if last.0 == ty => last.1 = last.1.saturating_add(c),
                _ => totals.push((ty, c)),
            }
            if let Some(slots) = end_rels.get(&end) {
                for &slot in slots {
                    let list = &mut answers[slot].1;
                    match list.last_mut() {
                        Some(last) if last.0 == ty => last.1 = last.1.saturating_add(c),
                        _ => list.push((ty, c)),
                    }
                }
            }
        }
        EntitySlice {
            totals,
            answers,
            truncated: enumeration.truncated,
        }
    }

    /// `P_n(e, rq)` counts by type; empty if the entity has no `rq` edge.
    pub fn answer_counts(&self, rq: RelationId) -> &[(PathType, u64)] {
        match self.answers.binary_search_by_key(&rq, |a| a.0) {
            Ok(i) => &self.answers[i].1,
            Err(_) => &[],
        }
    }

    pub fn has_relation(&self, rq: RelationId) -> bool {
        self.answers.binary_search_by_key(&rq, |a| a.0).is_ok()
    }

    pub fn total(&self, p: PathType) -> u64 {
        match self.totals.binary_search_by_key(&p, |t| t.0) {
            Ok(i) => self.totals[i].1,
            Err(_) => 0,
        }
    }

    pub fn relation_counts(&self, rq: RelationId) -> RelationCounts {
        let answers = self.answer_counts(rq);
        let prior: BTreeMap<PathType, u64> = answers.iter().copied().collect();
        let precision = self
            .totals
            .iter()
            .map(|&(ty, total)| (ty, (total, prior.get(&ty).copied().unwrap_or(0))))
            .collect();
        RelationCounts { prior, precision }
    }
}

/// The entity-local contributions to the prior and precision sums for `rq`.
pub fn per_entity_counts(kg: &KnowledgeGraph, e: EntityId, rq: RelationId, n: usize) -> RelationCounts {
    EntitySlice::compute(kg, e, n, DEFAULT_BUDGET).relation_counts(rq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_graph;

    fn pt(kg: &KnowledgeGraph, labels: &[&str]) -> PathType {
        let rels: Vec<_> = labels.iter().map(|l| kg.relation(l).unwrap()).collect();
        PathType::from_rels(&rels).unwrap()
    }

    #[test]
    fn path_type_packing() {
        let p = PathType::from_rels(&[RelationId(3), RelationId(0), RelationId(65535)]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.to_vec(), vec![RelationId(3), RelationId(0), RelationId(65535)]);
        assert_eq!(p.last(), Some(RelationId(65535)));
        assert!(PathType::single(RelationId(9)) < PathType::from_rels(&[RelationId(0), RelationId(0)]).unwrap());
        assert!(PathType::single(RelationId(1)) < PathType::single(RelationId(2)));
        assert!(PathType::from_rels(&[]).is_err());
        assert!(PathType::from_rels(&[RelationId(0); MAX_PATH_LEN + 1]).is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[3,0,65535]");
        assert_eq!(serde_json::from_str::<PathType>(&json).unwrap(), p);
    }

    #[test]
    fn toy_enumeration_from_a2() {
        let kg = toy_graph();
        let a2 = kg.entity("a2").unwrap();
        let us = kg.entity("us").unwrap();
        let hu = kg.entity("hu").unwrap();
        let en = enumerate_paths(&kg, a2, 2, DEFAULT_BUDGET);
        assert!(!en.truncated);
        assert!(en.paths.contains(&(pt(&kg, &["affiliated", "located_in"]), us, 1)));
        assert!(en.paths.contains(&(pt(&kg, &["born_in"]), hu, 1)));
    }

    #[test]
    fn length_one_is_adjacency() {
        let kg = toy_graph();
        for e in kg.entities() {
            let en = enumerate_paths(&kg, e, 1, DEFAULT_BUDGET);
            let mut adj = Vec::new();
            for g in kg.out_edges(e) {
                for &t in &g.targets {
                    adj.push((PathType::single(g.rel), t, 1));
                }
            }
            adj.sort();
            assert_eq!(en.paths, adj);
        }
    }

    #[test]
    fn isolated_entity_has_no_paths() {
        let mut kg = toy_graph();
        let x = kg.intern_entity("loner").unwrap();
        assert!(enumerate_paths(&kg, x, 3, DEFAULT_BUDGET).paths.is_empty());
    }

    #[test]
    fn echo_steps_are_excluded() {
        let kg = toy_graph();
        let a1 = kg.entity("a1").unwrap();
        let en = enumerate_paths(&kg, a1, 2, DEFAULT_BUDGET);
        let echo = pt(&kg, &["born_in", "inv~born_in"]);
        assert!(!en.paths.iter().any(|p| p.0 == echo && p.1 == a1));
        // a different edge back to a1 is fine
        let other = pt(&kg, &["born_in", "inv~place_of_death"]);
        assert!(en.paths.contains(&(other, a1, 1)));
    }

    #[test]
    fn toy_paths_to_answers() {
        let kg = toy_graph();
        let pod = kg.relation("place_of_death").unwrap();
        let a1 = kg.entity("a1").unwrap();
        let a2 = kg.entity("a2").unwrap();
        let got = paths_to_answers(&kg, a1, pod, 2, DEFAULT_BUDGET).unwrap();
        let want: BTreeMap<_, _> = [(pt(&kg, &["born_in"]), 1), (pt(&kg, &["place_of_death"]), 1)].into();
        assert_eq!(got, want);
        let got = paths_to_answers(&kg, a2, pod, 2, DEFAULT_BUDGET).unwrap();
        let want: BTreeMap<_, _> = [
            (pt(&kg, &["place_of_death"]), 1),
            (pt(&kg, &["affiliated", "located_in"]), 1),
        ]
        .into();
        assert_eq!(got, want);
        let prof = kg.relation("profession").unwrap();
        let us = kg.entity("us").unwrap();
        assert!(matches!(paths_to_answers(&kg, us, prof, 2, DEFAULT_BUDGET), Err(Error::NoAnswers(..))));
    }

    #[test]
    fn single_edge_only_answers_itself() {
        let mut kg = KnowledgeGraph::new();
        kg.add_labeled(crate::kg::Split::Train, "x", "r", "y").unwrap();
        let x = kg.entity("x").unwrap();
        let r = kg.relation("r").unwrap();
        let got = paths_to_answers(&kg, x, r, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(got, BTreeMap::from([(PathType::single(r), 1)]));
    }

    #[test]
    fn toy_traverse() {
        let kg = toy_graph();
        let a2 = kg.entity("a2").unwrap();
        let us = kg.entity("us").unwrap();
        assert_eq!(traverse(&kg, a2, pt(&kg, &["affiliated", "located_in"])), vec![us]);
        let born = kg.relation("born_in").unwrap();
        assert_eq!(traverse(&kg, a2, PathType::single(born)), kg.neighbors(a2, born).unwrap());
        assert!(traverse(&kg, a2, pt(&kg, &["located_in"])).is_empty());
        assert!(traverse(&kg, a2, pt(&kg, &["born_in", "inv~born_in"])).is_empty());
    }

    #[test]
    fn toy_per_entity_counts() {
        let kg = toy_graph();
        let pod = kg.relation("place_of_death").unwrap();
        let born = pt(&kg, &["born_in"]);
        let a1 = per_entity_counts(&kg, kg.entity("a1").unwrap(), pod, 2);
        assert_eq!(a1.prior_total(), 2);
        assert_eq!(a1.precision[&born], (1, 1));
        let a2 = per_entity_counts(&kg, kg.entity("a2").unwrap(), pod, 2);
        assert_eq!(a2.precision[&born], (1, 0));
        // no rq edge: nothing for the prior
        let us = per_entity_counts(&kg, kg.entity("us").unwrap(), pod, 2);
        assert!(us.prior.is_empty());
    }

    #[test]
    fn budget_truncates_whole_levels() {
        let kg = toy_graph();
        let a2 = kg.entity("a2").unwrap();
        let full = enumerate_paths(&kg, a2, 3, DEFAULT_BUDGET);
        let level1 = kg.out_degree(a2);
        let cut = enumerate_paths(&kg, a2, 3, level1 + 1);
        assert!(cut.truncated);
        assert_eq!(cut.depth, 1);
        assert!(cut.paths.iter().all(|p| p.0.len() == 1));
        assert!(!full.truncated);
        assert_eq!(full.depth, 3);
    }
}
