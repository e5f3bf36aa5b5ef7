use rand::RngCore;

use super::{distance_from_origin, Environment, Termination};
use crate::dtree::{DecisionTree, NodeId, NodeKind};
use crate::error::EnvError;
use crate::qlearn::{q_update, select_action, LearnerConfig};
use crate::scalar::Scalar;
use crate::seed;

/// How actions are chosen during an episode.
#[derive(Debug, Clone, Copy)]
pub enum Mode<'a, S> {
    /// Epsilon-greedy selection with a Q-update after every step.
    Train(&'a LearnerConfig<S>),
    /// Greedy selection, no updates.
    Greedy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeOptions {
    /// Record the distance of every pre-action observation from zero.
    pub record_distance: bool,
    /// Count node traversals in the tree.
    pub track_visits: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<S> {
    pub total_reward: S,
    pub length: usize,
    pub termination: Option<Termination>,
    /// One entry per step when requested, otherwise empty.
    pub distances: Vec<S>,
}

fn route<S: Scalar>(tree: &mut DecisionTree<S>, obs: &[S], track: bool) -> NodeId {
    if track {
        tree.route_tracked(obs)
    } else {
        tree.route(obs)
    }
}

/// Plays one episode of `tree` in `env`. The generator drives the reset,
/// exploration and tie-breaking.
///
/// The tree is routed once per step; in training mode the leaf reached from
/// the next observation supplies both the bootstrap value and the next
/// action. Time-limit truncation is treated as terminal.
pub fn run_episode<S, E, R>(
    tree: &mut DecisionTree<S>,
    env: &mut E,
    mode: Mode<'_, S>,
    opts: EpisodeOptions,
    rng: &mut R,
) -> Result<EpisodeRecord<S>, EnvError>
where
    S: Scalar,
    E: Environment<S> + ?Sized,
    R: RngCore,
{
    assert_eq!(
        tree.observation_dim(),
        env.observation_dim(),
        "tree and environment disagree on the observation dimension"
    );
    assert_eq!(
        tree.action_count(),
        env.action_count(),
        "tree and environment disagree on the action count"
    );
    let mut obs = env.reset(rng);
    let mut leaf = route(tree, &obs, opts.track_visits);
    let mut record = EpisodeRecord {
        total_reward: S::zero(),
        length: 0,
        termination: None,
        distances: Vec::new(),
    };
    loop {
        if opts.record_distance {
            record.distances.push(distance_from_origin(&obs));
        }
        let learning = match mode {
            Mode::Train(cfg) if matches!(tree.nodes[leaf].kind, NodeKind::QLeaf(_)) => Some(cfg),
            _ => None,
        };
        let action = match learning {
            Some(cfg) => select_action(tree.q_leaf_mut(leaf).expect("learning leaf"), cfg, rng),
            None => tree.greedy_at(leaf, rng),
        };
        let step = env.step(action)?;
        record.total_reward = record.total_reward + step.reward;
        record.length += 1;
        if step.done {
            if let (Mode::Train(cfg), Some(q)) = (mode, tree.q_leaf_mut(leaf)) {
                q_update(q, action, step.reward, S::zero(), true, cfg);
            }
            record.termination = step.info;
            return Ok(record);
        }
        let next = route(tree, &step.observation, opts.track_visits);
        if let Mode::Train(cfg) = mode {
            let next_max = tree.q_leaf(next).map_or(S::zero(), |q| q.max_q());
            if let Some(q) = tree.q_leaf_mut(leaf) {
                q_update(q, action, step.reward, next_max, false, cfg);
            }
        }
        leaf = next;
        obs = step.observation;
    }
}

/// Greedy episodes on fresh seeds: episode `i` resets from the stream
/// `(seed, TEST, i)`, so the same seed always replays the same starts.
pub fn evaluate_greedy<S, E>(
    tree: &DecisionTree<S>,
    env: &mut E,
    episodes: usize,
    base_seed: u64,
    record_distance: bool,
) -> Result<Vec<EpisodeRecord<S>>, EnvError>
where
    S: Scalar,
    E: Environment<S> + ?Sized,
{
    let mut tree = tree.clone();
    let opts = EpisodeOptions {
        record_distance,
        track_visits: false,
    };
    (0..episodes)
        .map(|i| {
            let mut rng = seed::derived_rng(base_seed, seed::stream::TEST, i as u64);
            run_episode(&mut tree, env, Mode::Greedy, opts, &mut rng)
        })
        .collect()
}
