//! Filtered link-prediction metrics over head and tail queries.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Split, Triple};
use crate::model::CbrModel;

pub const HITS_AT: [u32; 4] = [1, 3, 5, 10];

/// All known answers of `(e, r, ?)` over every partition, both directions.
#[derive(Clone, Debug, Default)]
pub struct TrueAnswers {
    map: HashMap<(EntityId, RelationId), Vec<EntityId>>,
}

impl TrueAnswers {
    pub fn from_kg(kg: &KnowledgeGraph) -> Self {
        let mut this = TrueAnswers::default();
        for split in [Split::Train, Split::Dev, Split::Test] {
            this.extend(kg.partition(split).iter().copied());
        }
        this
    }

    /// Adds facts (and their inverses).
    pub fn extend(&mut self, facts: impl IntoIterator<Item = Triple>) {
        for t in facts {
            for t in [t, t.inverse()] {
                let list = self.map.entry((t.head, t.rel)).or_default();
                if let Err(pos) = list.binary_search(&t.tail) {
                    list.insert(pos, t.tail);
                }
            }
        }
    }

    pub fn get(&self, e: EntityId, r: RelationId) -> &[EntityId] {
        self.map.get(&(e, r)).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Filtered rank of `gold` among `scored` (sorted best first). Other known
/// answers are skipped; entities tied with the gold share the average position
/// of the tie group. A gold entity that was not reached gets `num_entities`.
pub fn filtered_rank(scored: &[(EntityId, f64)], gold: EntityId, all_true: &[EntityId], num_entities: usize) -> f64 {
    let Some(gold_score) = scored.iter().find(|s| s.0 == gold).map(|s| s.1) else {
        return num_entities.max(1) as f64;
    };
    let mut better = 0usize;
    let mut tied = 0usize;
    for &(e, s) in scored {
        if e == gold || all_true.binary_search(&e).is_ok() {
            continue;
        }
        if s > gold_score {
            better += 1;
        } else if s == gold_score {
            tied += 1;
        } else {
            break;
        }
    }
    1.0 + better as f64 + tied as f64 / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Tail,
    Head,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Tail => "tail",
            Direction::Head => "head",
        }
    }
}

/// One evaluated query.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRank {
    /// The evaluated fact, as labels.
    pub fact: (String, String, String),
    pub direction: Direction,
    pub rank: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub query_count: usize,
    /// `None` when there are no queries.
    pub mrr: Option<f64>,
    pub hits_at: BTreeMap<u32, Option<f64>>,
}

impl Metrics {
    pub fn from_ranks(ranks: &[f64]) -> Self {
        let n = ranks.len();
        if n == 0 {
            return Metrics {
                query_count: 0,
                mrr: None,
                hits_at: HITS_AT.iter().map(|&k| (k, None)).collect(),
            };
        }
        // summed in sorted order so the result does not depend on query order
        let mut rr: Vec<f64> = ranks.iter().map(|r| 1.0 / r).collect();
        rr.sort_unstable_by(f64::total_cmp);
        let mrr = rr.iter().sum::<f64>() / n as f64;
        let hits_at = HITS_AT
            .iter()
            .map(|&k| (k, Some(ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / n as f64)))
            .collect();
        Metrics {
            query_count: n,
            mrr: Some(mrr),
            hits_at,
        }
    }

    pub fn hits(&self, k: u32) -> Option<f64> {
        self.hits_at.get(&k).copied().flatten()
    }

    /// Hits@N non-decreasing in N, Hits@1 ≤ MRR ≤ 1.
    pub fn check(&self) -> std::result::Result<(), String> {
        let Some(mrr) = self.mrr else {
            return Ok(());
        };
        let hits: Vec<f64> = HITS_AT.iter().map(|&k| self.hits(k).unwrap_or(0.0)).collect();
        if hits.windows(2).any(|w| w[0] > w[1]) || hits.iter().any(|h| !(0.0..=1.0).contains(h)) {
            return Err(format!("hits not monotone: {hits:?}"));
        }
        if hits[0] > mrr + 1e-12 || mrr > 1.0 + 1e-12 {
            return Err(format!("mrr {mrr} outside [hits@1 = {}, 1]", hits[0]));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub overall: Metrics,
    pub per_direction: BTreeMap<Direction, Metrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub batch: Option<String>,
}

impl MetricsReport {
    pub fn mrr(&self) -> Option<f64> {
        self.overall.mrr
    }
}

/// A fact to evaluate, or `None` for one whose labels are unknown to the graph.
pub type EvalFact = Option<Triple>;

/// Maps labelled facts onto the graph's ids; unknown labels give `None`.
pub fn resolve_facts(kg: &KnowledgeGraph, labeled: &[(String, String, String)]) -> Vec<EvalFact> {
    labeled
        .iter()
        .map(|(h, r, t)| Some(Triple::new(kg.entity(h)?, kg.relation(r)?, kg.entity(t)?)))
        .collect()
}

/// Rank of `gold` for the query `(e, r, ?)`.
pub fn rank_query(model: &CbrModel, kg: &KnowledgeGraph, truth: &TrueAnswers, e: EntityId, r: RelationId, gold: EntityId) -> f64 {
    let ranked = model.answer_query(kg, e, r);
    filtered_rank(&ranked.scored, gold, truth.get(e, r), kg.num_entities())
}

/// Evaluates each fact as a tail query and, if `with_head`, as a head query on
/// the inverse relation. Unresolved facts count as misses in every direction.
pub fn evaluate(
    model: &CbrModel,
    kg: &KnowledgeGraph,
    facts: &[EvalFact],
    with_head: bool,
    truth: &TrueAnswers,
) -> (MetricsReport, Vec<QueryRank>) {
    let mut directions = vec![Direction::Tail];
    if with_head {
        directions.push(Direction::Head);
    }
    let jobs: Vec<(usize, Direction)> = (0..facts.len())
        .flat_map(|i| directions.iter().map(move |&d| (i, d)))
        .collect();
    let miss = kg.num_entities().max(1) as f64;
    let ranks: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, d)| match facts[i] {
            None => miss,
            Some(t) => {
                let t = if d == Direction::Head { t.inverse() } else { t };
                rank_query(model, kg, truth, t.head, t.rel, t.tail)
            }
        })
        .collect();
    let mut per_direction = BTreeMap::new();
    for &d in &directions {
        let rs: Vec<f64> = jobs.iter().zip(&ranks).filter(|(j, _)| j.1 == d).map(|(_, &r)| r).collect();
        per_direction.insert(d, Metrics::from_ranks(&rs));
    }
    let report = MetricsReport {
        overall: Metrics::from_ranks(&ranks),
        per_direction,
        batch: None,
    };
    let dump = jobs
        .iter()
        .zip(&ranks)
        .map(|(&(i, d), &rank)| QueryRank {
            fact: match facts[i] {
                Some(t) => (
                    kg.entity_label(t.head).to_owned(),
                    kg.relation_label(t.rel),
                    kg.entity_label(t.tail).to_owned(),
                ),
                None => Default::default(),
            },
            direction: d,
            rank,
        })
        .collect();
    (report, dump)
}

/// Same as [`evaluate`] with labels kept for unresolved facts in the dump.
pub fn evaluate_labeled(
    model: &CbrModel,
    kg: &KnowledgeGraph,
    labeled: &[(String, String, String)],
    with_head: bool,
    truth: &TrueAnswers,
) -> (MetricsReport, Vec<QueryRank>) {
    let facts = resolve_facts(kg, labeled);
    let (report, mut dump) = evaluate(model, kg, &facts, with_head, truth);
    let per_fact = if with_head { 2 } else { 1 };
    for (i, q) in dump.iter_mut().enumerate() {
        if facts[i / per_fact].is_none() {
            q.fact = labeled[i / per_fact].clone();
        }
    }
    (report, dump)
}

/// Writes `head, relation, tail, direction, gold, rank` rows.
pub fn write_rank_dump(mut out: impl Write, dump: &[QueryRank]) -> Result<()> {
    let io = |e| Error::io("rank dump", e);
    writeln!(out, "head\trelation\ttail\tdirection\tgold\trank").map_err(io)?;
    for q in dump {
        let (h, r, t) = &q.fact;
        let gold = match q.direction {
            Direction::Tail => t,
            Direction::Head => h,
        };
        writeln!(out, "{h}\t{r}\t{t}\t{}\t{gold}\t{}", q.direction.as_str(), q.rank).map_err(io)?;
    }
    Ok(())
}
