use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use cbr_core::config::Hyperparams;
use cbr_core::eval::{evaluate, evaluate_labeled, write_rank_dump, Direction, Metrics, TrueAnswers};
use cbr_core::kg::{load_dir, read_triples, KnowledgeGraph, Split};
use cbr_core::model::{build_model, CbrModel, ModelSummary};
use cbr_core::snapshot;
use cbr_core::stream::{make_stream_plan, run_stream, PlanFile, StreamMode, StreamOptions, StreamPlan};
use serde::Serialize;

use crate::config::RunConfig;

/// Marks an error as caused by bad input (exit code 2).
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(InputError(e.into()))
}

/// 2 for input errors, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<InputError>() || cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(c) = cause.downcast_ref::<cbr_core::Error>() {
            return if c.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn load(cfg: &RunConfig) -> Result<KnowledgeGraph> {
    let dir = cfg.dataset()?;
    let kg = load_dir(dir, cfg.dev_alias.unwrap_or(false))?;
    let r = kg.load_report();
    tracing::info!(
        entities = kg.num_entities(),
        relations = kg.num_base_relations(),
        train_edges = kg.num_train_edges(),
        unseen = r.unseen_entities.len(),
        duplicates = r.duplicates_dropped,
        "loaded {}",
        dir.display()
    );
    Ok(kg)
}

/// Output sink: `--out` file or stdout.
fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display())).map_err(input_error)?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn emit_json<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<()> {
    let mut w = sink(cfg)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BuildReport<'a> {
    dataset: String,
    model: &'a Path,
    hyperparameters: &'a Hyperparams,
    summary: ModelSummary,
    fingerprint: String,
    wall_seconds: f64,
    timestamp: u64,
}

pub fn build(cfg: &RunConfig) -> Result<()> {
    let hyper = cfg.hyperparams()?;
    let model_dir = cfg
        .model
        .as_deref()
        .ok_or_else(|| input_error(anyhow!("no snapshot directory given (--model)")))?;
    let kg = load(cfg)?;
    let start = Instant::now();
    let model = build_model(&kg, &hyper)?;
    let manifest = snapshot::save(model_dir, &model, &kg)?;
    emit_json(
        cfg,
        &BuildReport {
            dataset: cfg.dataset_name(),
            model: model_dir,
            hyperparameters: &hyper,
            summary: model.summary(),
            fingerprint: manifest.fingerprint,
            wall_seconds: start.elapsed().as_secs_f64(),
            timestamp: timestamp(),
        },
    )
}

/// Snapshot if one is configured, otherwise a fresh build.
fn model_for(cfg: &RunConfig, kg: &KnowledgeGraph) -> Result<CbrModel> {
    match &cfg.model {
        Some(dir) => {
            let expected = if cfg.sets_hyperparams() { Some(cfg.hyperparams()?) } else { None };
            Ok(snapshot::load(dir, kg, expected.as_ref())?)
        }
        None => Ok(build_model(kg, &cfg.hyperparams()?)?),
    }
}

fn named_split(name: &str) -> Option<Split> {
    match name {
        "train" => Some(Split::Train),
        "dev" | "valid" => Some(Split::Dev),
        "test" => Some(Split::Test),
        _ => None,
    }
}

#[derive(Serialize)]
struct EvalReport<'a> {
    dataset: String,
    split: String,
    hyperparameters: &'a Hyperparams,
    metrics: &'a Metrics,
    per_direction: &'a BTreeMap<Direction, Metrics>,
    timestamp: u64,
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let kg = load(cfg)?;
    let model = model_for(cfg, &kg)?;
    let split = cfg.split.clone().unwrap_or_else(|| "test".into());
    let truth = TrueAnswers::from_kg(&kg);
    let (report, dump) = match named_split(&split) {
        Some(s) => {
            let facts: Vec<_> = kg.partition(s).iter().map(|&t| Some(t)).collect();
            evaluate(&model, &kg, &facts, cfg.with_head(), &truth)
        }
        None => {
            let labeled = read_triples(Path::new(&split))?;
            evaluate_labeled(&model, &kg, &labeled, cfg.with_head(), &truth)
        }
    };
    if let Some(path) = &cfg.dump_ranks {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display())).map_err(input_error)?;
        write_rank_dump(BufWriter::new(file), &dump)?;
    }
    emit_json(
        cfg,
        &EvalReport {
            dataset: cfg.dataset_name(),
            split,
            hyperparameters: &model.hyper,
            metrics: &report.overall,
            per_direction: &report.per_direction,
            timestamp: timestamp(),
        },
    )?;
    for m in std::iter::once(&report.overall).chain(report.per_direction.values()) {
        m.check().map_err(|e| anyhow!("inconsistent metrics: {e}"))?;
    }
    Ok(())
}

pub fn stream(cfg: &RunConfig, plan_only: bool) -> Result<()> {
    let kg = load(cfg)?;
    let plan = match &cfg.plan {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(input_error)?;
            let file: PlanFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            StreamPlan::from_file(&kg, &file)?
        }
        None => make_stream_plan(&kg, &cfg.plan_options())?,
    };
    if plan_only {
        return emit_json(cfg, &plan.to_file(&kg));
    }
    let split_name = cfg.split.as_deref().unwrap_or("test");
    let split = match named_split(split_name) {
        Some(Split::Train) | None => {
            return Err(input_error(anyhow!("stream evaluates on dev or test, not `{split_name}`")));
        }
        Some(s) => s,
    };
    let opts = StreamOptions {
        mode: cfg.mode.unwrap_or(StreamMode::Online),
        split,
        with_head: cfg.with_head(),
    };
    let hyper = cfg.hyperparams()?;
    let mut w = sink(cfg)?;
    let mut failure = None;
    run_stream(&kg, &plan, &hyper, &opts, |report| {
        if failure.is_some() {
            return;
        }
        let line = serde_json::to_string(report).map_err(anyhow::Error::from);
        if let Err(e) = line.and_then(|l| writeln!(w, "{l}").map_err(anyhow::Error::from)) {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    w.flush()?;
    Ok(())
}

pub fn inspect_clusters(cfg: &RunConfig) -> Result<()> {
    let kg = load(cfg)?;
    let model = model_for(cfg, &kg)?;
    let clusters: BTreeMap<String, Vec<&str>> = model
        .clustering
        .clusters()
        .map(|(c, members)| (c.0.to_string(), members.iter().map(|&e| kg.entity_label(e)).collect()))
        .collect();
    emit_json(cfg, &clusters)
}
