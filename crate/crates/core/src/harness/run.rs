use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Experiment, ExperimentConfig, Family};
use crate::dtree::{simplify, BuildOptions, DecisionTree};
use crate::envs::{evaluate_greedy, Environment};
use crate::error::{Error, Result};
use crate::evolve::{evolve, Evaluation, EvolutionConfig, GenerationStats};
use crate::grammar::{decode, Genotype, DEFAULT_MAX_EXPANSIONS};
use crate::metrics::{complexity, mean_std, InterpretabilityReport};
use crate::qlearn::train_on_episodes;
use crate::seed;
use crate::Tree;

/// Outcome of one independent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// Fitness of the champion when it was evaluated.
    pub training_score: f64,
    pub test_mean: f64,
    /// Population standard deviation.
    pub test_std: f64,
    pub test_episodes: usize,
    /// Episode `i` of the test resets from `(test_seed, TEST, i)`.
    pub test_seed: u64,
    pub max_steps: usize,
    /// Computed on the simplified tree.
    pub report: InterpretabilityReport,
    pub tree: Tree,
    pub simplified: Tree,
    pub history: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub environment: String,
    pub family: Family,
    pub records: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RunFailure>,
}

impl ExperimentResults {
    pub fn test_means(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.test_mean).collect()
    }
}

fn make_env(cfg: &ExperimentConfig) -> Box<dyn Environment<f64>> {
    let mut env = cfg.environment.make::<f64>();
    if let Some(n) = cfg.max_steps {
        env.set_max_steps(n);
    }
    env
}

fn build_options(cfg: &ExperimentConfig) -> BuildOptions<f64> {
    BuildOptions {
        normalization: cfg
            .normalization
            .as_ref()
            .map(|b| b.iter().map(|[lo, hi]| (*lo, *hi)).collect()),
    }
}

/// Decodes, trains and scores one genotype. The returned tree carries the
/// Q-values learned during this evaluation.
fn evaluate(exp: &Experiment, genotype: &Genotype, eval_seed: u64) -> Result<Evaluation<Tree>> {
    let cfg = &exp.config;
    let floor = Evaluation {
        fitness: cfg.environment.fitness_floor(),
        phenotype: None,
    };
    let Ok(derivation) = decode(genotype, &exp.grammar, DEFAULT_MAX_EXPANSIONS) else {
        return Ok(floor);
    };
    let schema = cfg.environment.schema();
    let mut tree = DecisionTree::from_tokens(&derivation.tokens(), &schema, &build_options(cfg))?;
    if cfg.family == Family::Ablation && tree.has_q_leaves() {
        return Err(Error::Invalid(format!(
            "grammar `{}` produced a Q-learning leaf in ablation mode",
            cfg.grammar
        )));
    }
    let mut rng = seed::rng(eval_seed);
    tree.init_q(&cfg.learner.init, &mut rng);
    let mut env = make_env(cfg);
    let summary = train_on_episodes(
        &mut tree,
        env.as_mut(),
        cfg.training_episodes,
        &cfg.learner,
        &cfg.early_stop,
        &mut rng,
    )?;
    Ok(Evaluation {
        fitness: summary.fitness,
        phenotype: Some(tree),
    })
}

/// Evolves, tests and simplifies the champion of run `run`. Nothing is
/// written to disk.
pub fn train_run(exp: &Experiment, run: usize) -> Result<(RunRecord, Vec<GenerationStats>)> {
    let cfg = &exp.config;
    let run_seed = seed::derive(cfg.seed, seed::stream::RUN, run as u64);
    let evo_cfg = EvolutionConfig {
        seed: run_seed,
        ..cfg.evolution.clone()
    };
    let evolution = evolve(&evo_cfg, |g, s| evaluate(exp, g, s), cfg.workers)?;
    let champion = evolution.champion();
    let tree = champion
        .phenotype
        .clone()
        .ok_or_else(|| Error::Invalid("no genotype of the run decoded into a tree".into()))?;

    let mut env = make_env(cfg);
    let test_seed = seed::derive(run_seed, seed::stream::TEST, 0);
    let episodes = evaluate_greedy(&tree, env.as_mut(), cfg.test_episodes, test_seed, false)?;
    let scores: Vec<f64> = episodes.iter().map(|e| e.total_reward).collect();
    let (test_mean, test_std) = mean_std(&scores);

    let validation_seed = seed::derive(run_seed, seed::stream::VALIDATION, 0);
    let simplified = simplify(
        &tree,
        env.as_mut(),
        cfg.validation_episodes,
        validation_seed,
    )?;
    let report = complexity(&simplified);

    let record = RunRecord {
        run,
        seed: run_seed,
        training_score: champion.fitness,
        test_mean,
        test_std,
        test_episodes: cfg.test_episodes,
        test_seed,
        max_steps: env.max_steps(),
        report,
        tree,
        simplified,
        history: format!("history_{run}.jsonl"),
    };
    Ok((record, evolution.history))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// Runs every run of the experiment and writes, under `cfg.output_dir`:
/// `config.toml`, `run_<r>.json`, `history_<r>.jsonl`, `results.json` and
/// `summary.csv`. A failing run is recorded and does not stop the others.
pub fn train(exp: &Experiment) -> Result<ExperimentResults> {
    let cfg = &exp.config;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config_text = toml::to_string(cfg).map_err(|e| Error::Invalid(e.to_string()))?;
    write(&dir.join("config.toml"), &config_text)?;

    let mut results = ExperimentResults {
        environment: cfg.environment.to_string(),
        family: cfg.family,
        records: Vec::new(),
        failures: Vec::new(),
    };
    for run in 0..cfg.runs {
        match train_run(exp, run) {
            Ok((record, history)) => {
                let mut lines = String::new();
                for h in &history {
                    lines += &serde_json::to_string(h).expect("serializable");
                    lines.push('\n');
                }
                write(&dir.join(&record.history), &lines)?;
                write(&dir.join(format!("run_{run}.json")), &to_json(&record))?;
                results.records.push(record);
            }
            Err(e) => results.failures.push(RunFailure {
                run,
                error: e.to_string(),
            }),
        }
    }
    write(&dir.join("results.json"), &to_json(&results))?;
    write(&dir.join("summary.csv"), &summary_csv(&results.records))?;
    Ok(results)
}

/// One row per run and a closing `mean ± std` row.
pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("run,training_score,test_mean,test_std,M\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{:.2},{:.2},{:.2},{:.2}",
            r.run + 1,
            r.training_score,
            r.test_mean,
            r.test_std,
            r.report.m
        );
    }
    if !records.is_empty() {
        let col = |f: fn(&RunRecord) -> f64| {
            let xs: Vec<f64> = records.iter().map(f).collect();
            let (m, s) = mean_std(&xs);
            format!("{m:.2} ± {s:.2}")
        };
        let _ = writeln!(
            out,
            "mean,{},{},{},{}",
            col(|r| r.training_score),
            col(|r| r.test_mean),
            col(|r| r.test_std),
            col(|r| r.report.m)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Experiment {
        let mut exp = Experiment::preset("cartpole_orthogonal").unwrap();
        let c = &mut exp.config;
        c.runs = 2;
        c.evolution.population_size = 6;
        c.evolution.generations = 2;
        c.evolution.genotype_length = 64;
        c.training_episodes = 2;
        c.test_episodes = 3;
        c.validation_episodes = 3;
        c.max_steps = Some(100);
        exp
    }

    #[test]
    fn run_is_deterministic() {
        let exp = tiny();
        let (a, ha) = train_run(&exp, 1).unwrap();
        let (b, hb) = train_run(&exp, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert_eq!(ha.len(), 3);
        assert_eq!(a.max_steps, 100);
        assert!(a.test_mean <= 100.0);
    }

    #[test]
    fn test_scores_are_recomputable() {
        let exp = tiny();
        let (r, _) = train_run(&exp, 0).unwrap();
        let mut env = make_env(&exp.config);
        let again =
            evaluate_greedy(&r.tree, env.as_mut(), r.test_episodes, r.test_seed, false).unwrap();
        let scores: Vec<f64> = again.iter().map(|e| e.total_reward).collect();
        assert_eq!(mean_std(&scores), (r.test_mean, r.test_std));
    }

    #[test]
    fn writes_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut exp = tiny();
        exp.config.output_dir = dir.path().join("out");
        let res = train(&exp).unwrap();
        assert_eq!(res.records.len(), 2);
        for f in [
            "config.toml",
            "run_0.json",
            "run_1.json",
            "history_0.jsonl",
            "results.json",
            "summary.csv",
        ] {
            assert!(exp.config.output_dir.join(f).exists(), "{f}");
        }
        let csv = fs::read_to_string(exp.config.output_dir.join("summary.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().last().unwrap().starts_with("mean,"));
        let back: ExperimentResults = serde_json::from_str(
            &fs::read_to_string(exp.config.output_dir.join("results.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn ablation_never_learns() {
        let mut exp = Experiment::preset("cartpole_orthogonal_ablation").unwrap();
        exp.config.evolution.population_size = 6;
        exp.config.evolution.generations = 1;
        exp.config.training_episodes = 2;
        exp.config.test_episodes = 2;
        exp.config.validation_episodes = 2;
        let (r, _) = train_run(&exp, 0).unwrap();
        assert!(!r.tree.has_q_leaves());
    }
}
