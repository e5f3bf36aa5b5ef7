//! Tabular Q-learning inside tree leaves.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dtree::{greedy_action, DecisionTree, QLeaf};
use crate::envs::{run_episode, Environment, EpisodeOptions, Mode};
use crate::error::EnvError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EpsilonSchedule<S> {
    Constant {
        epsilon: S,
    },
    /// `epsilon = initial * multiplier^k` on the k-th visit of a leaf
    /// (k counted from 0).
    Decay {
        initial: S,
        multiplier: S,
    },
}

impl<S: Scalar> EpsilonSchedule<S> {
    pub fn at(&self, visits: u64) -> S {
        match *self {
            EpsilonSchedule::Constant { epsilon } => epsilon,
            EpsilonSchedule::Decay {
                initial,
                multiplier,
            } => initial * multiplier.powf(S::lit(visits as f64)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LearningRate<S> {
    Constant {
        alpha: S,
    },
    /// `1 / k`, with `k` the visit count of the state-action pair.
    InverseVisits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QInit<S> {
    Uniform { low: S, high: S },
    Constant { value: S },
}

impl<S: Scalar> QInit<S> {
    /// Draws in `f64` first so both precisions consume the generator alike.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match *self {
            QInit::Uniform { low, high } => {
                let u: f64 = rng.random();
                S::lit(low.as_f64() + u * (high.as_f64() - low.as_f64()))
            }
            QInit::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig<S> {
    pub epsilon: EpsilonSchedule<S>,
    pub learning_rate: LearningRate<S>,
    pub init: QInit<S>,
    #[serde(default = "default_discount")]
    pub discount: S,
}

fn default_discount<S: Scalar>() -> S {
    S::lit(0.99)
}

impl<S: Scalar> Default for LearnerConfig<S> {
    /// Constant epsilon 0.05, alpha 0.001, uniform [-1, 1] initialization.
    fn default() -> Self {
        LearnerConfig {
            epsilon: EpsilonSchedule::Constant {
                epsilon: S::lit(0.05),
            },
            learning_rate: LearningRate::Constant {
                alpha: S::lit(0.001),
            },
            init: QInit::Uniform {
                low: -S::one(),
                high: S::one(),
            },
            discount: default_discount(),
        }
    }
}

impl<S: Scalar> LearnerConfig<S> {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |x: S| x >= S::zero() && x <= S::one();
        match self.epsilon {
            EpsilonSchedule::Constant { epsilon } if !unit(epsilon) => {
                return Err(format!("epsilon {epsilon} outside [0, 1]"))
            }
            EpsilonSchedule::Decay {
                initial,
                multiplier,
            } => {
                if !unit(initial) {
                    return Err(format!("initial epsilon {initial} outside [0, 1]"));
                }
                if !(multiplier > S::zero() && multiplier <= S::one()) {
                    return Err(format!("epsilon multiplier {multiplier} outside (0, 1]"));
                }
            }
            _ => {}
        }
        if let LearningRate::Constant { alpha } = self.learning_rate {
            if !(alpha > S::zero()) {
                return Err(format!("learning rate {alpha} must be positive"));
            }
        }
        if let QInit::Uniform { low, high } = self.init {
            if !(low <= high) {
                return Err("uniform init needs low <= high".into());
            }
        }
        if !unit(self.discount) {
            return Err(format!("discount {} outside [0, 1]", self.discount));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_period")]
    pub period: usize,
}

fn default_period() -> usize {
    30
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        EarlyStopConfig {
            enabled: false,
            period: default_period(),
        }
    }
}

/// Epsilon-greedy choice at a leaf; epsilon uses the visit count before this
/// visit. Increments the leaf and state-action counters.
pub fn select_action<S: Scalar, R: Rng + ?Sized>(
    leaf: &mut QLeaf<S>,
    cfg: &LearnerConfig<S>,
    rng: &mut R,
) -> usize {
    let epsilon = cfg.epsilon.at(leaf.visits).as_f64();
    let action = if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..leaf.q.len())
    } else {
        greedy_action(&leaf.q, rng)
    };
    leaf.visits += 1;
    leaf.action_visits[action] += 1;
    action
}

/// One-step Q-learning update of `leaf.q[action]`.
pub fn q_update<S: Scalar>(
    leaf: &mut QLeaf<S>,
    action: usize,
    reward: S,
    next_max_q: S,
    terminal: bool,
    cfg: &LearnerConfig<S>,
) {
    let target = if terminal {
        reward
    } else {
        reward + cfg.discount * next_max_q
    };
    let alpha = match cfg.learning_rate {
        LearningRate::Constant { alpha } => alpha,
        LearningRate::InverseVisits => S::one() / S::lit(leaf.action_visits[action].max(1) as f64),
    };
    let q = &mut leaf.q[action];
    *q = *q + alpha * (target - *q);
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    /// Undiscounted total reward of every episode played.
    pub scores: Vec<f64>,
    pub fitness: f64,
    pub stopped_early: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Trains the leaves of `tree` for up to `episodes` episodes.
///
/// Fitness is the mean of all scores, or with early stopping the mean of the
/// last completed period (all scores when no period completed). Training
/// stops after a period whose mean is below the previous period's.
pub fn train_on_episodes<S, E, R>(
    tree: &mut DecisionTree<S>,
    env: &mut E,
    episodes: usize,
    cfg: &LearnerConfig<S>,
    stop: &EarlyStopConfig,
    rng: &mut R,
) -> Result<TrainingSummary, EnvError>
where
    S: Scalar,
    E: Environment<S> + ?Sized,
    R: RngCore,
{
    assert!(episodes > 0, "at least one training episode");
    let period = stop.period.max(1);
    let mut scores = Vec::with_capacity(episodes);
    let mut stopped_early = false;
    for _ in 0..episodes {
        let r = run_episode(tree, env, Mode::Train(cfg), EpisodeOptions::default(), rng)?;
        scores.push(r.total_reward.as_f64());
        let n = scores.len();
        if stop.enabled && n % period == 0 && n >= 2 * period {
            let current = mean(&scores[n - period..]);
            let previous = mean(&scores[n - 2 * period..n - period]);
            if current < previous {
                stopped_early = true;
                break;
            }
        }
    }
    let n = scores.len();
    let fitness = if stop.enabled && n >= period {
        let last = n - n % period;
        mean(&scores[last - period..last])
    } else {
        mean(&scores)
    };
    Ok(TrainingSummary {
        scores,
        fitness,
        stopped_early,
    })
}
