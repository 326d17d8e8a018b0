//! `cbr`: build, evaluate and stream case-based knowledge-graph completion models.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cbr_core::stream::StreamMode;
use tracing_subscriber::EnvFilter;

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "cbr", version, about = "Case-based reasoning over knowledge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a model from a dataset's train split and save a snapshot.
    Build(BuildArgs),
    /// Evaluate a model on a split (filtered MRR and Hits@N).
    Eval(EvalArgs),
    /// Replay the dataset as a stream of entity batches.
    Stream(StreamArgs),
    /// Print cluster membership as JSON.
    InspectClusters(InspectArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config file; flags and CBR_* variables override its values.
    #[arg(long, env = "CBR_CONFIG")]
    config: Option<PathBuf>,
    /// Dataset directory holding train.txt, valid.txt and test.txt.
    #[arg(long, env = "CBR_DATASET")]
    dataset: Option<PathBuf>,
    /// Hyperparameter preset: wn18rr, fb122 or nell-995.
    #[arg(long, env = "CBR_PRESET")]
    preset: Option<String>,
    /// Contextual entities per query (K).
    #[arg(short = 'k', long, env = "CBR_K")]
    k: Option<usize>,
    /// Path types kept per contextual entity (N).
    #[arg(long, env = "CBR_N_PATHS")]
    n_paths: Option<usize>,
    /// Maximum path length (n).
    #[arg(long, env = "CBR_MAX_LEN")]
    max_len: Option<usize>,
    /// Linkage threshold for flat clusters.
    #[arg(long, env = "CBR_TAU")]
    tau: Option<f64>,
    /// Path enumeration budget per entity.
    #[arg(long, env = "CBR_BUDGET")]
    budget: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, env = "CBR_RNG_SEED")]
    rng_seed: Option<u64>,
    /// Accept dev.txt when valid.txt is absent.
    #[arg(long, env = "CBR_DEV_ALIAS")]
    dev_alias: Option<bool>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "CBR_THREADS")]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, env = "CBR_OUT")]
    out: Option<PathBuf>,
    /// Print the merged configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            dataset: self.dataset.clone(),
            preset: self.preset.clone(),
            k: self.k,
            n_paths: self.n_paths,
            max_len: self.max_len,
            tau: self.tau,
            budget: self.budget,
            rng_seed: self.rng_seed,
            dev_alias: self.dev_alias,
            threads: self.threads,
            out: self.out.clone(),
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    common: Common,
    /// Snapshot directory to write.
    #[arg(long, env = "CBR_MODEL")]
    model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Snapshot to evaluate; without it the model is built in memory.
    #[arg(long, env = "CBR_MODEL")]
    model: Option<PathBuf>,
    /// train, dev, test, or a path to a triples file.
    #[arg(long, env = "CBR_SPLIT")]
    split: Option<String>,
    /// Write one TSV row per query with its rank.
    #[arg(long, env = "CBR_DUMP_RANKS")]
    dump_ranks: Option<PathBuf>,
    /// Only predict tails.
    #[arg(long)]
    tail_only: bool,
}

#[derive(Args, Debug)]
struct StreamArgs {
    #[command(flatten)]
    common: Common,
    /// online (incremental updates) or oracle (rebuild per batch).
    #[arg(long, env = "CBR_MODE", value_parser = parse_mode)]
    mode: Option<StreamMode>,
    /// Plan file to replay instead of drawing a new one.
    #[arg(long, env = "CBR_PLAN")]
    plan: Option<PathBuf>,
    /// Write the plan and stop.
    #[arg(long)]
    plan_only: bool,
    #[arg(long, env = "CBR_NUM_BATCHES")]
    num_batches: Option<usize>,
    /// Share of entities in the seed graph.
    #[arg(long, env = "CBR_SEED_FRACTION")]
    seed_fraction: Option<f64>,
    /// Share of entities, by degree, forced into the seed.
    #[arg(long, env = "CBR_POPULAR_FRACTION")]
    popular_fraction: Option<f64>,
    /// dev or test facts to evaluate after each batch.
    #[arg(long, env = "CBR_SPLIT")]
    split: Option<String>,
    /// Only predict tails.
    #[arg(long)]
    tail_only: bool,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[command(flatten)]
    common: Common,
    /// Snapshot to read; without it the clustering is computed.
    #[arg(long, env = "CBR_MODEL")]
    model: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<StreamMode, String> {
    match s {
        "online" => Ok(StreamMode::Online),
        "oracle" => Ok(StreamMode::Oracle),
        _ => Err(format!("unknown mode `{s}` (expected online or oracle)")),
    }
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

/// File config, then flags and environment.
fn resolve(common: &Common, specific: RunConfig) -> anyhow::Result<RunConfig> {
    let base = match &common.config {
        Some(path) => RunConfig::from_file(path).map_err(commands::input_error)?,
        None => RunConfig::default(),
    };
    Ok(base.overlay(common.config()).overlay(specific))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (common, specific) = match &cli.command {
        Command::Build(a) => (
            &a.common,
            RunConfig {
                model: a.model.clone(),
                ..Default::default()
            },
        ),
        Command::Eval(a) => (
            &a.common,
            RunConfig {
                model: a.model.clone(),
                split: a.split.clone(),
                dump_ranks: a.dump_ranks.clone(),
                tail_only: flag(a.tail_only),
                ..Default::default()
            },
        ),
        Command::Stream(a) => (
            &a.common,
            RunConfig {
                mode: a.mode,
                plan: a.plan.clone(),
                num_batches: a.num_batches,
                seed_fraction: a.seed_fraction,
                popular_fraction: a.popular_fraction,
                split: a.split.clone(),
                tail_only: flag(a.tail_only),
                ..Default::default()
            },
        ),
        Command::InspectClusters(a) => (
            &a.common,
            RunConfig {
                model: a.model.clone(),
                ..Default::default()
            },
        ),
    };
    let cfg = resolve(common, specific)?;
    if common.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| commands::input_error(anyhow::anyhow!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Build(_) => commands::build(&cfg),
        Command::Eval(_) => commands::eval(&cfg),
        Command::Stream(a) => commands::stream(&cfg, a.plan_only),
        Command::InspectClusters(_) => commands::inspect_clusters(&cfg),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
