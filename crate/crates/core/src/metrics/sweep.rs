use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtree::DecisionTree;
use crate::envs::{evaluate_greedy, with_noise, Environment};
use crate::error::EnvError;
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub mean: f64,
    /// Population standard deviation over the episodes.
    pub std: f64,
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Greedy score of `tree` under Gaussian observation noise, one point per
/// sigma.
///
/// Every sigma replays the same episode starts (those of
/// `evaluate_greedy(.., seed, ..)`), so the `sigma = 0` point equals the
/// clean evaluation and the curve differs only through the noise. Sigmas are
/// evaluated in parallel.
pub fn noise_sweep<S, E, F>(
    tree: &DecisionTree<S>,
    make_env: F,
    sigmas: &[f64],
    episodes: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, EnvError>
where
    S: Scalar,
    E: Environment<S>,
    F: Fn() -> E + Sync,
{
    assert!(!sigmas.is_empty(), "noise sweep needs at least one sigma");
    sigmas
        .par_iter()
        .enumerate()
        .map(|(idx, &sigma)| {
            let noise_seed = seed::derive(seed, seed::stream::NOISE, idx as u64);
            let mut env = with_noise(make_env(), sigma, noise_seed);
            let records = evaluate_greedy(tree, &mut env, episodes, seed, false)?;
            let scores: Vec<f64> = records.iter().map(|r| r.total_reward.as_f64()).collect();
            let (mean, std) = mean_std(&scores);
            Ok(SweepPoint { sigma, mean, std })
        })
        .collect()
}

/// Mean distance of the observation from the zero state at each step.
///
/// Entry `t` averages over the episodes still running at step `t`; the trace
/// ends when the last episode does, or at `horizon`.
pub fn stability_trace<S, E>(
    tree: &DecisionTree<S>,
    env: &mut E,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<f64>, EnvError>
where
    S: Scalar,
    E: Environment<S> + ?Sized,
{
    let saved = env.max_steps();
    env.set_max_steps(horizon);
    let records = evaluate_greedy(tree, env, episodes, seed, true);
    env.set_max_steps(saved);
    let records = records?;
    let mut sums = vec![0.0; horizon];
    let mut counts = vec![0usize; horizon];
    for r in &records {
        for (t, d) in r.distances.iter().take(horizon).enumerate() {
            sums[t] += d.as_f64();
            counts[t] += 1;
        }
    }
    let len = counts.iter().take_while(|&&c| c > 0).count();
    Ok((0..len).map(|t| sums[t] / counts[t] as f64).collect())
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("sigma,mean,std\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.sigma, p.mean, p.std);
    }
    out
}

pub fn stability_csv(trace: &[f64]) -> String {
    let mut out = String::from("t,mean_distance\n");
    for (t, d) in trace.iter().enumerate() {
        let _ = writeln!(out, "{t},{d}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtree::tests::best_orthogonal;
    use crate::envs::CartPole;

    #[test]
    fn zero_sigma_is_clean_evaluation() {
        let tree = best_orthogonal();
        let sweep = noise_sweep(&tree, CartPole::<f64>::new, &[0.0], 20, 9).unwrap();
        let clean = evaluate_greedy(&tree, &mut CartPole::new(), 20, 9, false).unwrap();
        let scores: Vec<f64> = clean.iter().map(|r| r.total_reward).collect();
        let (mean, std) = mean_std(&scores);
        assert_eq!(sweep[0].mean, mean);
        assert_eq!(sweep[0].std, std);
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let tree = best_orthogonal();
        let sigmas = [0.0, 0.5, 0.01];
        let a = noise_sweep(&tree, CartPole::<f64>::new, &sigmas, 5, 1).unwrap();
        let b = noise_sweep(&tree, CartPole::<f64>::new, &sigmas, 5, 1).unwrap();
        assert_eq!(a, b);
        let got: Vec<f64> = a.iter().map(|p| p.sigma).collect();
        assert_eq!(got, sigmas);
        // heavy noise on every input topples the pole quickly
        assert!(a[1].mean < a[0].mean);
    }

    #[test]
    fn trace_length_and_restored_limit() {
        let tree = best_orthogonal();
        let mut env = CartPole::<f64>::new();
        let trace = stability_trace(&tree, &mut env, 5, 100, 3).unwrap();
        assert_eq!(trace.len(), 100);
        assert!(trace.iter().all(|d| d.is_finite() && *d >= 0.0));
        assert_eq!(env.max_steps(), 500);
    }

    #[test]
    fn csv_shapes() {
        let csv = sweep_csv(&[SweepPoint {
            sigma: 0.1,
            mean: 2.0,
            std: 0.5,
        }]);
        assert_eq!(csv, "sigma,mean,std\n0.1,2,0.5\n");
        assert_eq!(stability_csv(&[0.0, 1.5]), "t,mean_distance\n0,0\n1,1.5\n");
    }

    #[test]
    fn mean_std_population() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
    }
}
