//! Control tasks, the observation-noise wrapper and the episode runner.

mod cartpole;
mod lander;
mod mountain_car;
mod noise;
mod runner;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dtree::Schema;
use crate::error::EnvError;
use crate::scalar::Scalar;

pub use cartpole::CartPole;
pub use lander::{Lander, RewardBreakdown};
pub use mountain_car::MountainCar;
pub use noise::{with_noise, Noisy};
pub use runner::{evaluate_greedy, run_episode, EpisodeOptions, EpisodeRecord, Mode};

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Pole fell or cart left the track.
    Failure,
    Goal,
    Crash,
    Rest,
    OutOfBounds,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<S> {
    pub observation: Vec<S>,
    pub reward: S,
    pub done: bool,
    pub info: Option<Termination>,
}

/// A resettable episodic task with a discrete action set.
pub trait Environment<S: Scalar>: Send {
    fn observation_names(&self) -> &'static [&'static str];
    fn action_names(&self) -> &'static [&'static str];

    fn observation_dim(&self) -> usize {
        self.observation_names().len()
    }

    fn action_count(&self) -> usize {
        self.action_names().len()
    }

    fn max_steps(&self) -> usize;
    fn set_max_steps(&mut self, max_steps: usize);

    /// Starts a new episode and returns the first observation.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<S>;

    /// Advances one step. Stepping a finished episode is an error.
    fn step(&mut self, action: usize) -> Result<StepResult<S>, EnvError>;

    /// Noise-free internal state.
    fn state(&self) -> Vec<S>;

    fn schema(&self) -> Schema {
        Schema::new(
            self.observation_names().iter().copied(),
            self.action_names().iter().copied(),
        )
    }
}

impl<S: Scalar, E: Environment<S> + ?Sized> Environment<S> for Box<E> {
    fn observation_names(&self) -> &'static [&'static str] {
        (**self).observation_names()
    }
    fn action_names(&self) -> &'static [&'static str] {
        (**self).action_names()
    }
    fn max_steps(&self) -> usize {
        (**self).max_steps()
    }
    fn set_max_steps(&mut self, max_steps: usize) {
        (**self).set_max_steps(max_steps)
    }
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<S> {
        (**self).reset(rng)
    }
    fn step(&mut self, action: usize) -> Result<StepResult<S>, EnvError> {
        (**self).step(action)
    }
    fn state(&self) -> Vec<S> {
        (**self).state()
    }
}

/// The shipped tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvId {
    #[serde(rename = "CartPole-v1", alias = "cartpole")]
    CartPole,
    #[serde(rename = "MountainCar-v0", alias = "mountaincar")]
    MountainCar,
    #[serde(rename = "LunarLander-v2", alias = "lunarlander")]
    LunarLander,
}

impl EnvId {
    pub fn name(self) -> &'static str {
        match self {
            EnvId::CartPole => "CartPole-v1",
            EnvId::MountainCar => "MountainCar-v0",
            EnvId::LunarLander => "LunarLander-v2",
        }
    }

    pub fn make<S: Scalar>(self) -> Box<dyn Environment<S>> {
        match self {
            EnvId::CartPole => Box::new(CartPole::new()),
            EnvId::MountainCar => Box::new(MountainCar::new()),
            EnvId::LunarLander => Box::new(Lander::new()),
        }
    }

    /// Score given to genotypes that do not decode.
    pub fn fitness_floor(self) -> f64 {
        match self {
            EnvId::CartPole => 0.0,
            EnvId::MountainCar => -200.0,
            EnvId::LunarLander => -1000.0,
        }
    }

    pub fn schema(self) -> Schema {
        self.make::<f64>().schema()
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cartpole-v1" | "cartpole" => Ok(EnvId::CartPole),
            "mountaincar-v0" | "mountaincar" => Ok(EnvId::MountainCar),
            "lunarlander-v2" | "lunarlander" | "lander" => Ok(EnvId::LunarLander),
            _ => Err(EnvError::UnknownEnvironment(s.to_string())),
        }
    }
}

pub(crate) fn check_action(action: usize, count: usize) -> Result<(), EnvError> {
    if action < count {
        Ok(())
    } else {
        Err(EnvError::InvalidAction { action, count })
    }
}

/// Euclidean norm of an observation, i.e. its distance from the zero state.
pub fn distance_from_origin<S: Scalar>(obs: &[S]) -> S {
    obs.iter().fold(S::zero(), |acc, x| acc + *x * *x).sqrt()
}
