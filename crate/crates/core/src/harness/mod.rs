//! Config-driven experiments and the operations behind the command line.
//!
//! An experiment is a TOML file:
//!
//! ```toml
//! environment = "CartPole-v1"
//! grammar = "builtin:cartpole_orthogonal"   # or a path relative to this file
//! family = "orthogonal"                     # orthogonal | oblique | ablation
//! training_episodes = 10
//! runs = 10
//! test_episodes = 100
//! validation_episodes = 100
//! seed = 0
//! output_dir = "results/cartpole_orthogonal"
//! # max_steps = 500
//! # workers = 4
//! # normalization = [[-1.2, 0.7], [-0.07, 0.07]]
//!
//! [evolution]
//! population_size = 200
//! generations = 100
//! genotype_length = 1024
//! gene_mutation_probability = 0.1
//!
//! [learner]
//! epsilon = { type = "constant", epsilon = 0.05 }
//! learning_rate = { type = "constant", alpha = 0.001 }
//! init = { type = "uniform", low = -1.0, high = 1.0 }
//!
//! [early_stop]
//! enabled = false
//! ```
//!
//! `evolution.seed` is ignored; every run derives its own seed from `seed`.

mod commands;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::EnvId;
use crate::error::{Error, Result};
use crate::evolve::EvolutionConfig;
use crate::grammar::{parse_grammar, Grammar};
use crate::qlearn::EarlyStopConfig;
use crate::LearnerConfig;

pub use commands::{
    compare, inspect, load_scores, load_tree, simplify_tree, sweep_noise, sweep_stability,
    test_tree, Comparison, Inspection, TestOptions, TestSummary, ALPHA,
};
pub use run::{summary_csv, train, train_run, ExperimentResults, RunFailure, RunRecord};

/// Shape of the evolved trees. `Ablation` grammars end in action names and
/// play without Q-learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Orthogonal,
    Oblique,
    Ablation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvId,
    pub grammar: String,
    pub family: Family,
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub early_stop: EarlyStopConfig,
    pub training_episodes: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_episodes")]
    pub test_episodes: usize,
    #[serde(default = "default_episodes")]
    pub validation_episodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Episode length cap; the environment default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Per-observation `[low, high]` bounds for oblique conditions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Vec<[f64; 2]>>,
    /// Evaluation threads; rayon's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_runs() -> usize {
    10
}

fn default_episodes() -> usize {
    100
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// Shipped configurations, by name.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "cartpole_orthogonal",
        include_str!("../../presets/cartpole_orthogonal.toml"),
    ),
    (
        "cartpole_oblique",
        include_str!("../../presets/cartpole_oblique.toml"),
    ),
    (
        "cartpole_orthogonal_ablation",
        include_str!("../../presets/cartpole_orthogonal_ablation.toml"),
    ),
    (
        "cartpole_oblique_ablation",
        include_str!("../../presets/cartpole_oblique_ablation.toml"),
    ),
    (
        "mountaincar_orthogonal",
        include_str!("../../presets/mountaincar_orthogonal.toml"),
    ),
    (
        "mountaincar_oblique",
        include_str!("../../presets/mountaincar_oblique.toml"),
    ),
    (
        "mountaincar_orthogonal_ablation",
        include_str!("../../presets/mountaincar_orthogonal_ablation.toml"),
    ),
    (
        "mountaincar_oblique_ablation",
        include_str!("../../presets/mountaincar_oblique_ablation.toml"),
    ),
    (
        "lunarlander_oblique",
        include_str!("../../presets/lunarlander_oblique.toml"),
    ),
    (
        "lunarlander_oblique_ablation",
        include_str!("../../presets/lunarlander_oblique_ablation.toml"),
    ),
];

/// Shipped grammars, referenced as `builtin:<name>`.
pub const GRAMMARS: &[(&str, &str)] = &[
    (
        "cartpole_orthogonal",
        include_str!("../../grammars/cartpole_orthogonal.bnf"),
    ),
    (
        "cartpole_oblique",
        include_str!("../../grammars/cartpole_oblique.bnf"),
    ),
    (
        "cartpole_orthogonal_ablation",
        include_str!("../../grammars/cartpole_orthogonal_ablation.bnf"),
    ),
    (
        "cartpole_oblique_ablation",
        include_str!("../../grammars/cartpole_oblique_ablation.bnf"),
    ),
    (
        "mountaincar_orthogonal",
        include_str!("../../grammars/mountaincar_orthogonal.bnf"),
    ),
    (
        "mountaincar_oblique",
        include_str!("../../grammars/mountaincar_oblique.bnf"),
    ),
    (
        "mountaincar_orthogonal_ablation",
        include_str!("../../grammars/mountaincar_orthogonal_ablation.bnf"),
    ),
    (
        "mountaincar_oblique_ablation",
        include_str!("../../grammars/mountaincar_oblique_ablation.bnf"),
    ),
    (
        "lunarlander_oblique",
        include_str!("../../grammars/lunarlander_oblique.bnf"),
    ),
    (
        "lunarlander_oblique_ablation",
        include_str!("../../grammars/lunarlander_oblique_ablation.bnf"),
    ),
];

fn lookup<'a>(table: &'a [(&str, &str)], name: &str) -> Option<&'a str> {
    table
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn builtin_grammar(name: &str) -> Option<&'static str> {
    lookup(GRAMMARS, name)
}

/// A validated config with its grammar loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub grammar: Grammar,
    /// Where the config came from, for error messages.
    pub source: PathBuf,
}

impl Experiment {
    /// Reads a TOML config; relative grammar paths resolve against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, path, base)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = lookup(PRESETS, name).ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::Invalid(format!(
                "unknown preset `{name}` (known: {})",
                known.join(", ")
            ))
        })?;
        Self::from_toml(text, Path::new(&format!("preset:{name}")), Path::new("."))
    }

    pub fn from_toml(text: &str, source: &Path, base: &Path) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: source.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::new(config, source, base)
    }

    pub fn new(config: ExperimentConfig, source: &Path, base: &Path) -> Result<Self> {
        let bad = |message: String| Error::Config {
            path: source.to_path_buf(),
            message,
        };
        let grammar_text = match config.grammar.strip_prefix("builtin:") {
            Some(name) => builtin_grammar(name)
                .ok_or_else(|| bad(format!("grammar: unknown builtin `{name}`")))?
                .to_string(),
            None => {
                let p = base.join(&config.grammar);
                std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))?
            }
        };
        let grammar = parse_grammar(&grammar_text)
            .map_err(|e| bad(format!("grammar `{}`: {e}", config.grammar)))?;
        config.validate().map_err(bad)?;
        Ok(Experiment {
            config,
            grammar,
            source: source.to_path_buf(),
        })
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.runs == 0 {
            return Err("runs must be >= 1".into());
        }
        if self.training_episodes == 0 || self.test_episodes == 0 {
            return Err("training_episodes and test_episodes must be >= 1".into());
        }
        if self.max_steps == Some(0) {
            return Err("max_steps must be >= 1".into());
        }
        if self.workers == Some(0) {
            return Err("workers must be >= 1".into());
        }
        if self.early_stop.enabled && self.early_stop.period == 0 {
            return Err("early_stop.period must be >= 1".into());
        }
        if let Some(bounds) = &self.normalization {
            let dim = self.environment.schema().observation_dim();
            if bounds.len() != dim {
                return Err(format!(
                    "normalization has {} bounds, {} has {dim} observations",
                    bounds.len(),
                    self.environment
                ));
            }
            if bounds.iter().any(|[lo, hi]| !(lo < hi)) {
                return Err("normalization bounds need low < high".into());
            }
        }
        self.evolution
            .validate()
            .map_err(|e| format!("evolution: {e}"))?;
        self.learner
            .validate()
            .map_err(|e| format!("learner: {e}"))?;
        Ok(())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Orthogonal => "orthogonal",
            Family::Oblique => "oblique",
            Family::Ablation => "ablation",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "orthogonal" => Ok(Family::Orthogonal),
            "oblique" => Ok(Family::Oblique),
            "ablation" => Ok(Family::Ablation),
            _ => Err(format!("unknown tree family `{s}`")),
        }
    }
}
