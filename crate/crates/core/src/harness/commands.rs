use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::ExperimentResults;
use crate::dtree::{simplify, DecisionTree};
use crate::envs::{evaluate_greedy, with_noise, EnvId, Environment};
use crate::error::{Error, Result, TreeError};
use crate::metrics::{
    complexity, mann_whitney_u, mean_std, noise_sweep, stability_trace, InterpretabilityReport,
    SweepPoint, TestOutcome,
};
use crate::Tree;

/// Significance threshold used by [`compare`].
pub const ALPHA: f64 = 0.05;

/// Reads a tree document and checks it against `env` when given.
pub fn load_tree(path: &Path, env: Option<EnvId>) -> Result<Tree> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tree = DecisionTree::from_json(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if let Some(env) = env {
        let schema = env.schema();
        if tree.schema.observation_dim() != schema.observation_dim()
            || tree.schema.action_count() != schema.action_count()
        {
            return Err(Error::Tree(TreeError::Invalid(format!(
                "tree has {} observations and {} actions, {env} has {} and {}",
                tree.schema.observation_dim(),
                tree.schema.action_count(),
                schema.observation_dim(),
                schema.action_count()
            ))));
        }
    }
    Ok(tree)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOptions {
    pub episodes: usize,
    pub max_steps: Option<usize>,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            episodes: 100,
            max_steps: None,
            sigma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub environment: String,
    pub episodes: usize,
    pub max_steps: usize,
    pub sigma: f64,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
    pub scores: Vec<f64>,
}

fn env_with_limit(env: EnvId, max_steps: Option<usize>) -> Box<dyn Environment<f64>> {
    let mut e = env.make::<f64>();
    if let Some(n) = max_steps {
        e.set_max_steps(n);
    }
    e
}

/// Greedy evaluation, optionally under observation noise. Uses the same
/// episode starts as [`noise_sweep`] for the same seed.
pub fn test_tree(tree: &Tree, env: EnvId, opts: &TestOptions) -> Result<TestSummary> {
    let base = env_with_limit(env, opts.max_steps);
    let max_steps = base.max_steps();
    let noise_seed = crate::seed::derive(opts.seed, crate::seed::stream::NOISE, 0);
    let mut noisy = with_noise(base, opts.sigma, noise_seed);
    let records = evaluate_greedy(tree, &mut noisy, opts.episodes, opts.seed, false)?;
    let scores: Vec<f64> = records.iter().map(|r| r.total_reward).collect();
    let (mean, std) = mean_std(&scores);
    Ok(TestSummary {
        environment: env.to_string(),
        episodes: opts.episodes,
        max_steps,
        sigma: opts.sigma,
        seed: opts.seed,
        mean,
        std,
        scores,
    })
}

pub fn simplify_tree(
    tree: &Tree,
    env: EnvId,
    episodes: usize,
    max_steps: Option<usize>,
    seed: u64,
) -> Result<Tree> {
    let mut e = env_with_limit(env, max_steps);
    Ok(simplify(tree, e.as_mut(), episodes, seed)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inspection {
    pub text: String,
    pub dot: String,
    pub report: InterpretabilityReport,
}

pub fn inspect(tree: &Tree) -> Inspection {
    Inspection {
        text: tree.to_text(),
        dot: tree.to_dot(),
        report: complexity(tree),
    }
}

/// Per-run scores from a results file, a directory holding
/// `results.json`, or a bare JSON array of numbers.
pub fn load_scores(path: &Path) -> Result<Vec<f64>> {
    let file = if path.is_dir() {
        path.join("results.json")
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let json = |e: serde_json::Error| Error::Json {
        path: file.clone(),
        source: e,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json)?;
    let scores = if value.is_array() {
        serde_json::from_value::<Vec<f64>>(value).map_err(json)?
    } else {
        serde_json::from_value::<ExperimentResults>(value)
            .map_err(json)?
            .test_means()
    };
    if scores.is_empty() {
        return Err(Error::Config {
            path: file,
            message: "no scores to compare".into(),
        });
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub outcome: TestOutcome,
    pub alpha: f64,
    pub significant: bool,
}

pub fn compare(a: &[f64], b: &[f64]) -> Result<Comparison> {
    let outcome = mann_whitney_u(a, b)?;
    Ok(Comparison {
        outcome,
        alpha: ALPHA,
        significant: outcome.significant(ALPHA),
    })
}

pub fn sweep_noise(
    tree: &Tree,
    env: EnvId,
    sigmas: &[f64],
    episodes: usize,
    max_steps: Option<usize>,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if sigmas.is_empty() {
        return Err(Error::Invalid(
            "noise sweep needs at least one sigma".into(),
        ));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::Invalid(format!("sigma {s} must be finite and >= 0")));
    }
    Ok(noise_sweep(
        tree,
        || env_with_limit(env, max_steps),
        sigmas,
        episodes,
        seed,
    )?)
}

pub fn sweep_stability(
    tree: &Tree,
    env: EnvId,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut e = env.make::<f64>();
    Ok(stability_trace(tree, e.as_mut(), episodes, horizon, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtree::tests::best_orthogonal;

    fn fixture(dir: &Path, tree: &Tree) -> std::path::PathBuf {
        let p = dir.join("tree.json");
        std::fs::write(&p, tree.to_json()).unwrap();
        p
    }

    #[test]
    fn zero_sigma_test_matches_sweep() {
        let t = best_orthogonal();
        let opts = TestOptions {
            episodes: 10,
            seed: 4,
            ..TestOptions::default()
        };
        let s = test_tree(&t, EnvId::CartPole, &opts).unwrap();
        let sweep = sweep_noise(&t, EnvId::CartPole, &[0.0], 10, None, 4).unwrap();
        assert_eq!((s.mean, s.std), (sweep[0].mean, sweep[0].std));
        assert_eq!(s.max_steps, 500);
    }

    #[test]
    fn max_steps_override() {
        let t = best_orthogonal();
        let opts = TestOptions {
            episodes: 3,
            max_steps: Some(50),
            ..TestOptions::default()
        };
        let s = test_tree(&t, EnvId::CartPole, &opts).unwrap();
        assert!(s.scores.iter().all(|&x| x <= 50.0));
    }

    #[test]
    fn tree_dimension_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = fixture(dir.path(), &best_orthogonal());
        assert!(load_tree(&p, Some(EnvId::CartPole)).is_ok());
        assert!(load_tree(&p, Some(EnvId::MountainCar)).is_err());
        assert!(load_tree(&dir.path().join("missing.json"), None).is_err());
    }

    #[test]
    fn scores_from_plain_array_and_compare() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        std::fs::write(&p, "[1, 2, 3, 4, 5, 6, 7, 8]").unwrap();
        let a = load_scores(&p).unwrap();
        let same = compare(&a, &a).unwrap();
        assert_eq!(same.outcome.p_value, 1.0);
        assert!(!same.significant);
        let b: Vec<f64> = (9..=16).map(f64::from).collect();
        let c = compare(&a, &b).unwrap();
        assert!(c.significant);
        assert!((c.outcome.p_value - 2.0 / 12_870.0).abs() < 1e-12);
    }

    #[test]
    fn empty_scores_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.json");
        std::fs::write(&p, "[]").unwrap();
        assert!(load_scores(&p).is_err());
    }

    #[test]
    fn inspect_single_leaf() {
        let t = Tree::single_leaf(EnvId::CartPole.schema());
        let i = inspect(&t);
        assert_eq!(i.text.lines().count(), 1);
        assert_eq!(i.report.m, 0.0);
    }

    #[test]
    fn bad_sigma() {
        let t = best_orthogonal();
        assert!(sweep_noise(&t, EnvId::CartPole, &[], 1, None, 0).is_err());
        assert!(sweep_noise(&t, EnvId::CartPole, &[-1.0], 1, None, 0).is_err());
    }
}
