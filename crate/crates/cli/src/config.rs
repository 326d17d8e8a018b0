use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cbr_core::config::Hyperparams;
use cbr_core::stream::{PlanOptions, StreamMode};
use serde::{Deserialize, Serialize};

/// Flat run configuration. Every field is optional so a config file, the
/// environment and command-line flags can each fill in part of it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Named hyperparameter preset (`wn18rr`, `fb122`, `nell-995`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_alias: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_only: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_ranks: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<StreamMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub popular_fraction: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(
            self, top, dataset, preset, k, n_paths, max_len, tau, budget, rng_seed, dev_alias, threads, model, out,
            split, tail_only, dump_ranks, mode, plan, num_batches, seed_fraction, popular_fraction
        );
        self
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| anyhow::Error::new(cbr_core::Error::InvalidConfig("no dataset given (--dataset)".into())))
    }

    /// Dataset name used for reports: the last path component.
    pub fn dataset_name(&self) -> String {
        self.dataset
            .as_deref()
            .and_then(|d| d.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    /// Whether any hyperparameter was given explicitly.
    pub fn sets_hyperparams(&self) -> bool {
        self.preset.is_some()
            || self.k.is_some()
            || self.n_paths.is_some()
            || self.max_len.is_some()
            || self.tau.is_some()
            || self.budget.is_some()
    }

    /// Preset (named or guessed from the dataset directory), then explicit values.
    pub fn hyperparams(&self) -> Result<Hyperparams> {
        let base = match &self.preset {
            Some(name) => Hyperparams::preset(name)
                .ok_or_else(|| cbr_core::Error::InvalidConfig(format!("unknown preset `{name}`")))?,
            None => Hyperparams::preset(&self.dataset_name()).unwrap_or_default(),
        };
        let h = Hyperparams {
            k: self.k.unwrap_or(base.k),
            n_paths: self.n_paths.unwrap_or(base.n_paths),
            max_len: self.max_len.unwrap_or(base.max_len),
            tau: self.tau.unwrap_or(base.tau),
            budget: self.budget.unwrap_or(base.budget),
        };
        h.validate()?;
        Ok(h)
    }

    pub fn plan_options(&self) -> PlanOptions {
        let d = PlanOptions::default();
        PlanOptions {
            seed_fraction: self.seed_fraction.unwrap_or(d.seed_fraction),
            popular_fraction: self.popular_fraction.unwrap_or(d.popular_fraction),
            num_batches: self.num_batches.unwrap_or(d.num_batches),
            rng_seed: self.rng_seed.unwrap_or(d.rng_seed),
        }
    }

    pub fn with_head(&self) -> bool {
        !self.tail_only.unwrap_or(false)
    }
}
