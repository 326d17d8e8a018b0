//! Model snapshots on disk.
//!
//! A snapshot is a directory holding `manifest.json` (format name, version,
//! graph fingerprint, hyperparameters) and one JSON file per model part:
//! `vectors.json`, `clusters.json`, `stats.json` and `cases.json`. The graph
//! itself is not stored; loading checks that the graph given has the same
//! fingerprint as the one the model was built from.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::FlatClustering;
use crate::config::Hyperparams;
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Split};
use crate::model::{CbrModel, ClusterStats, EntityCases};
use crate::sim::EntityVectors;

pub const FORMAT: &str = "cbr-model";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub fingerprint: String,
    pub hyperparams: Hyperparams,
    pub num_entities: usize,
    pub num_clusters: usize,
}

/// SHA-256 over the vocabularies and the train facts.
pub fn fingerprint(kg: &KnowledgeGraph) -> String {
    let mut h = Sha256::new();
    for label in kg.entity_labels() {
        h.update(label.as_bytes());
        h.update([0]);
    }
    h.update([1]);
    for label in kg.relation_labels() {
        h.update(label.as_bytes());
        h.update([0]);
    }
    h.update([1]);
    let mut train = kg.partition(Split::Train).to_vec();
    train.sort_unstable();
    for t in train {
        for x in [t.head.0, t.rel.0, t.tail.0] {
            h.update(x.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct Cases {
    cases: Vec<EntityCases>,
    truncated: Vec<EntityId>,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer(&mut w, value)?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(&path, e))
}

fn read_json<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::Snapshot(format!("{} is missing", path.display())));
    }
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))
}

pub fn save(dir: &Path, model: &CbrModel, kg: &KnowledgeGraph) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        fingerprint: fingerprint(kg),
        hyperparams: model.hyper.clone(),
        num_entities: model.num_entities(),
        num_clusters: model.clustering.num_clusters(),
    };
    write_json(dir, "vectors.json", &model.vectors)?;
    write_json(dir, "clusters.json", &model.clustering)?;
    write_json(dir, "stats.json", &model.stats)?;
    write_json(
        dir,
        "cases.json",
        &Cases {
            cases: model.cases.clone(),
            truncated: model.truncated.clone(),
        },
    )?;
    // written last so a partial snapshot has no manifest
    write_json(dir, "manifest.json", &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let manifest: Manifest = read_json(dir, "manifest.json")?;
    if manifest.format != FORMAT {
        return Err(Error::Snapshot(format!("unknown snapshot format `{}`", manifest.format)));
    }
    if manifest.version != VERSION {
        return Err(Error::Snapshot(format!(
            "snapshot version {} is not supported (expected {VERSION})",
            manifest.version
        )));
    }
    Ok(manifest)
}

/// Loads a snapshot built from `kg`. If `expected` is given its
/// hyperparameters must match the snapshot's.
pub fn load(dir: &Path, kg: &KnowledgeGraph, expected: Option<&Hyperparams>) -> Result<CbrModel> {
    let manifest = read_manifest(dir)?;
    if manifest.fingerprint != fingerprint(kg) {
        return Err(Error::Snapshot("snapshot was built from a different graph".into()));
    }
    if let Some(h) = expected {
        if *h != manifest.hyperparams {
            return Err(Error::Snapshot(format!(
                "configured hyperparameters {h:?} differ from the snapshot's {:?}",
                manifest.hyperparams
            )));
        }
    }
    let vectors: EntityVectors = read_json(dir, "vectors.json")?;
    let clustering: FlatClustering = read_json(dir, "clusters.json")?;
    let stats: Vec<ClusterStats> = read_json(dir, "stats.json")?;
    let Cases { cases, truncated } = read_json(dir, "cases.json")?;
    if clustering.num_entities() != manifest.num_entities
        || stats.len() != clustering.num_clusters()
        || cases.len() != manifest.num_entities
    {
        return Err(Error::Snapshot("snapshot parts disagree in size".into()));
    }
    clustering.check_partition().map_err(Error::Snapshot)?;
    Ok(CbrModel {
        hyper: manifest.hyperparams,
        vectors,
        clustering,
        stats,
        cases,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy_graph, toy_graph_held_out};
    use crate::model::build_model;

    #[test]
    fn round_trip() {
        let kg = toy_graph();
        let hyper = Hyperparams::new(2, 10, 2, 0.5);
        let model = build_model(&kg, &hyper).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &model, &kg).unwrap();
        assert_eq!(load(dir.path(), &kg, Some(&hyper)).unwrap(), model);
        assert_eq!(load(dir.path(), &kg, None).unwrap(), model);
    }

    #[test]
    fn mismatches_are_reported() {
        let kg = toy_graph();
        let hyper = Hyperparams::new(2, 10, 2, 0.5);
        let model = build_model(&kg, &hyper).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &model, &kg).unwrap();
        let other = Hyperparams::new(3, 10, 2, 0.5);
        assert!(matches!(load(dir.path(), &kg, Some(&other)), Err(Error::Snapshot(_))));
        assert!(matches!(load(dir.path(), &toy_graph_held_out(), None), Err(Error::Snapshot(_))));

        let path = dir.path().join("manifest.json");
        let text = fs::read_to_string(&path).unwrap().replace("\"version\":1", "\"version\":99");
        fs::write(&path, text).unwrap();
        let err = load(dir.path(), &kg, None).unwrap_err();
        assert!(err.to_string().contains("version 99"), "{err}");
    }

    #[test]
    fn missing_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load(dir.path(), &toy_graph(), None), Err(Error::Snapshot(_))));
    }

    #[test]
    fn fingerprint_is_stable() {
        assert_eq!(fingerprint(&toy_graph()), fingerprint(&toy_graph()));
        assert_ne!(fingerprint(&toy_graph()), fingerprint(&toy_graph_held_out()));
    }
}
