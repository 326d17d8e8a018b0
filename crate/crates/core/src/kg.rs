//! Knowledge graph storage.
//!
//! Every fact `(h, r, t)` is stored together with its inverse `(t, r⁻¹, h)`.
//! Only train facts are placed in the adjacency lists; dev and test facts are
//! kept as partitions for evaluation bookkeeping.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefix that marks the label of an inverse relation. Input labels may not use it.
pub const INVERSE_PREFIX: &str = "inv~";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Relation handle. Forward relations have even ids and their inverse is the
/// next odd id, so `inverse` is a bit flip and an involution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl RelationId {
    #[inline]
    pub fn forward(base: u32) -> Self {
        RelationId(base << 1)
    }

    #[inline]
    pub fn inverse(self) -> Self {
        RelationId(self.0 ^ 1)
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn base(self) -> u32 {
        self.0 >> 1
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub rel: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, rel: RelationId, tail: EntityId) -> Self {
        Triple { head, rel, tail }
    }

    pub fn inverse(self) -> Self {
        Triple {
            head: self.tail,
            rel: self.rel.inverse(),
            tail: self.head,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    fn intern(&mut self, label: &str) -> u32 {
        if let Some(id) = self.index.get(label) {
            return *id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

/// Bookkeeping produced while loading a dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    /// Number of entities seen in the train file.
    pub train_entities: usize,
    /// Entities that only occur in dev/test files.
    pub unseen_entities: Vec<EntityId>,
    pub unseen_dev_triples: usize,
    pub unseen_test_triples: usize,
    /// Triples dropped because the same fact was already present in some partition.
    pub duplicates_dropped: usize,
}

/// Outgoing edges of one entity for a single relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelEdges {
    pub rel: RelationId,
    pub targets: Vec<EntityId>,
}

#[derive(Clone, Debug, Default)]
pub struct KnowledgeGraph {
    entities: Vocab,
    relations: Vocab,
    adjacency: Vec<Vec<RelEdges>>,
    train: Vec<Triple>,
    dev: Vec<Triple>,
    test: Vec<Triple>,
    facts: HashSet<Triple>,
    num_train_edges: usize,
    report: LoadReport,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty graph that shares the entity and relation vocabulary of `other`.
    pub fn with_vocabulary_of(other: &KnowledgeGraph) -> Self {
        KnowledgeGraph {
            entities: other.entities.clone(),
            relations: other.relations.clone(),
            adjacency: vec![Vec::new(); other.entities.len()],
            ..Default::default()
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Number of relations including inverses.
    pub fn num_relations(&self) -> usize {
        self.relations.len() * 2
    }

    pub fn num_base_relations(&self) -> usize {
        self.relations.len()
    }

    /// Number of stored train edges, inverses included.
    pub fn num_train_edges(&self) -> usize {
        self.num_train_edges
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.num_relations() as u32).map(RelationId)
    }

    pub fn entity(&self, label: &str) -> Option<EntityId> {
        self.entities.get(label).map(EntityId)
    }

    pub fn entity_label(&self, e: EntityId) -> &str {
        &self.entities.labels[e.index()]
    }

    /// Resolves a relation label; labels carrying [`INVERSE_PREFIX`] resolve to inverses.
    pub fn relation(&self, label: &str) -> Option<RelationId> {
        match label.strip_prefix(INVERSE_PREFIX) {
            Some(base) => self.relations.get(base).map(|b| RelationId::forward(b).inverse()),
            None => self.relations.get(label).map(RelationId::forward),
        }
    }

    pub fn relation_label(&self, r: RelationId) -> String {
        let base = &self.relations.labels[r.base() as usize];
        if r.is_inverse() {
            format!("{INVERSE_PREFIX}{base}")
        } else {
            base.clone()
        }
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entities.labels
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relations.labels
    }

    pub fn contains_entity(&self, e: EntityId) -> bool {
        e.index() < self.entities.len()
    }

    pub fn contains_relation(&self, r: RelationId) -> bool {
        r.index() < self.num_relations()
    }

    pub fn intern_entity(&mut self, label: &str) -> Result<EntityId> {
        if label.is_empty() {
            return Err(Error::EmptyLabel);
        }
        let id = EntityId(self.entities.intern(label));
        if self.adjacency.len() < self.entities.len() {
            self.adjacency.resize(self.entities.len(), Vec::new());
        }
        Ok(id)
    }

    /// Interns a forward relation label.
    pub fn intern_relation(&mut self, label: &str) -> Result<RelationId> {
        if label.is_empty() {
            return Err(Error::EmptyLabel);
        }
        if label.starts_with(INVERSE_PREFIX) {
            return Err(Error::ReservedLabel(label.to_owned()));
        }
        Ok(RelationId::forward(self.relations.intern(label)))
    }

    /// Adds a fact to a partition. Returns false if the same fact (in either
    /// direction) is already present in any partition.
    pub fn add_fact(&mut self, split: Split, triple: Triple) -> Result<bool> {
        self.check_triple(triple)?;
        let canonical = canonical(triple);
        if !self.facts.insert(canonical) {
            return Ok(false);
        }
        match split {
            Split::Train => {
                self.insert_edge(triple);
                self.insert_edge(triple.inverse());
                self.train.push(triple);
            }
            Split::Dev => self.dev.push(triple),
            Split::Test => self.test.push(triple),
        }
        Ok(true)
    }

    /// Adds a fact by label, interning any new labels.
    pub fn add_labeled(&mut self, split: Split, head: &str, rel: &str, tail: &str) -> Result<bool> {
        let h = self.intern_entity(head)?;
        let r = self.intern_relation(rel)?;
        let t = self.intern_entity(tail)?;
        self.add_fact(split, Triple::new(h, r, t))
    }

    fn check_triple(&self, t: Triple) -> Result<()> {
        for e in [t.head, t.tail] {
            if !self.contains_entity(e) {
                return Err(Error::UnknownEntity(e.0));
            }
        }
        if !self.contains_relation(t.rel) {
            return Err(Error::UnknownRelation(t.rel.0));
        }
        Ok(())
    }

    fn insert_edge(&mut self, t: Triple) {
        let edges = &mut self.adjacency[t.head.index()];
        let slot = match edges.binary_search_by_key(&t.rel, |g| g.rel) {
            Ok(i) => i,
            Err(i) => {
                edges.insert(
                    i,
                    RelEdges {
                        rel: t.rel,
                        targets: Vec::new(),
                    },
                );
                i
            }
        };
        let targets = &mut edges[slot].targets;
        if let Err(pos) = targets.binary_search(&t.tail) {
            targets.insert(pos, t.tail);
            self.num_train_edges += 1;
        }
    }

    /// All outgoing train edges of `e`, grouped by relation and sorted.
    #[inline]
    pub fn out_edges(&self, e: EntityId) -> &[RelEdges] {
        &self.adjacency[e.index()]
    }

    /// `S_{e,r}`: train neighbours of `e` through `r`, sorted by id.
    pub fn neighbors(&self, e: EntityId, r: RelationId) -> Result<&[EntityId]> {
        if !self.contains_entity(e) {
            return Err(Error::UnknownEntity(e.0));
        }
        if !self.contains_relation(r) {
            return Err(Error::UnknownRelation(r.0));
        }
        Ok(self.targets(e, r))
    }

    /// Unchecked variant of [`neighbors`](Self::neighbors) for hot loops.
    #[inline]
    pub fn targets(&self, e: EntityId, r: RelationId) -> &[EntityId] {
        let edges = &self.adjacency[e.index()];
        match edges.binary_search_by_key(&r, |g| g.rel) {
            Ok(i) => &edges[i].targets,
            Err(_) => &[],
        }
    }

    pub fn has_edge(&self, t: Triple) -> bool {
        self.contains_entity(t.head) && self.targets(t.head, t.rel).binary_search(&t.tail).is_ok()
    }

    /// Distinct relations (inverses included) with at least one outgoing train edge.
    pub fn out_relation_types(&self, e: EntityId) -> Result<Vec<RelationId>> {
        if !self.contains_entity(e) {
            return Err(Error::UnknownEntity(e.0));
        }
        Ok(self.adjacency[e.index()].iter().map(|g| g.rel).collect())
    }

    pub fn out_degree(&self, e: EntityId) -> usize {
        self.adjacency[e.index()].iter().map(|g| g.targets.len()).sum()
    }

    pub fn partition(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    /// Partition facts together with their inverses.
    pub fn augmented(&self, split: Split) -> impl Iterator<Item = Triple> + '_ {
        self.partition(split).iter().flat_map(|t| [*t, t.inverse()])
    }

    pub fn load_report(&self) -> &LoadReport {
        &self.report
    }

    /// Full scan check of the adjacency invariants. Returns a description of the
    /// first violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut count = 0;
        for e in self.entities() {
            let edges = self.out_edges(e);
            if !edges.windows(2).all(|w| w[0].rel < w[1].rel) {
                return Err(format!("relations of {e:?} not strictly sorted"));
            }
            for g in edges {
                if g.targets.is_empty() {
                    return Err(format!("empty edge group at {e:?}/{:?}", g.rel));
                }
                if !g.targets.windows(2).all(|w| w[0] < w[1]) {
                    return Err(format!("targets of {e:?}/{:?} not strictly sorted", g.rel));
                }
                for &t in &g.targets {
                    count += 1;
                    if !self.has_edge(Triple::new(t, g.rel.inverse(), e)) {
                        return Err(format!("missing inverse of ({e:?}, {:?}, {t:?})", g.rel));
                    }
                }
            }
        }
        if count != self.num_train_edges {
            return Err(format!("edge count {} != recorded {}", count, self.num_train_edges));
        }
        Ok(())
    }
}

fn canonical(t: Triple) -> Triple {
    if t.rel.is_inverse() {
        t.inverse()
    } else {
        t
    }
}

/// Where to find the three partition files.
#[derive(Clone, Debug)]
pub struct DatasetFiles {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: PathBuf,
}

impl DatasetFiles {
    /// Resolves `train.txt`, `valid.txt` (or `dev.txt` when `accept_dev_alias`)
    /// and `test.txt` inside `dir`. A missing dev file yields an empty dev split.
    pub fn in_dir(dir: &Path, accept_dev_alias: bool) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::MissingFile(dir.to_path_buf()));
        }
        let train = dir.join("train.txt");
        let test = dir.join("test.txt");
        for f in [&train, &test] {
            if !f.is_file() {
                return Err(Error::MissingFile(f.clone()));
            }
        }
        let valid = dir.join("valid.txt");
        let alias = dir.join("dev.txt");
        let dev = if valid.is_file() {
            Some(valid)
        } else if accept_dev_alias && alias.is_file() {
            Some(alias)
        } else {
            tracing::warn!("no dev split found in {}", dir.display());
            None
        };
        Ok(DatasetFiles { train, dev, test })
    }
}

/// Parses one `head<TAB>relation<TAB>tail` file.
pub fn read_triples(path: &Path) -> Result<Vec<(String, String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text, path)
}

pub(crate) fn parse_triples(text: &str, path: &Path) -> Result<Vec<(String, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let err = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: msg.to_owned(),
        };
        if fields.len() != 3 {
            return Err(err(&format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(err("empty label"));
        }
        if fields[1].starts_with(INVERSE_PREFIX) {
            return Err(err(&format!("relation label uses reserved prefix `{INVERSE_PREFIX}`")));
        }
        out.push((fields[0].to_owned(), fields[1].to_owned(), fields[2].to_owned()));
    }
    Ok(out)
}

/// Loads the three partitions. Ids follow first appearance over train, dev, test.
pub fn load_kg(files: &DatasetFiles) -> Result<KnowledgeGraph> {
    let train = read_triples(&files.train)?;
    let dev = match &files.dev {
        Some(p) => read_triples(p)?,
        None => Vec::new(),
    };
    let test = read_triples(&files.test)?;
    build_from_labeled(&train, &dev, &test)
}

pub fn load_dir(dir: &Path, accept_dev_alias: bool) -> Result<KnowledgeGraph> {
    load_kg(&DatasetFiles::in_dir(dir, accept_dev_alias)?)
}

type Labeled = (String, String, String);

pub fn build_from_labeled(train: &[Labeled], dev: &[Labeled], test: &[Labeled]) -> Result<KnowledgeGraph> {
    let mut kg = KnowledgeGraph::new();
    let mut dropped = 0;
    for (h, r, t) in train {
        if !kg.add_labeled(Split::Train, h, r, t)? {
            dropped += 1;
        }
    }
    let train_entities = kg.num_entities();
    let mut unseen = [0usize; 2];
    for (slot, (split, triples)) in [(Split::Dev, dev), (Split::Test, test)].into_iter().enumerate() {
        for (h, r, t) in triples {
            if !kg.add_labeled(split, h, r, t)? {
                dropped += 1;
                continue;
            }
            let h = kg.entity(h).expect("interned");
            let t = kg.entity(t).expect("interned");
            if h.index() >= train_entities || t.index() >= train_entities {
                unseen[slot] += 1;
            }
        }
    }
    kg.report = LoadReport {
        train_entities,
        unseen_entities: (train_entities..kg.num_entities()).map(|i| EntityId(i as u32)).collect(),
        unseen_dev_triples: unseen[0],
        unseen_test_triples: unseen[1],
        duplicates_dropped: dropped,
    };
    Ok(kg)
}
