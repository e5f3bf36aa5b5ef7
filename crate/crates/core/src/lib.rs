//! Grammatical Evolution of decision-tree policies whose leaves learn with
//! tabular Q-learning.
//!
//! The pipeline: a [`grammar::Grammar`] decodes integer genotypes into
//! [`dtree::DecisionTree`] phenotypes; [`qlearn`] trains the leaves inside an
//! [`envs::Environment`]; [`evolve`] searches genotypes with the mean episode
//! score as fitness; [`metrics`] scores interpretability and compares runs;
//! [`harness`] drives configured multi-run experiments.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod dtree;
pub mod envs;
pub mod error;
pub mod evolve;
pub mod grammar;
pub mod harness;
pub mod metrics;
pub mod qlearn;
pub mod scalar;
pub mod seed;

pub use error::{EnvError, Error, GrammarError, Result, TreeError};
pub use scalar::Scalar;

pub type Tree = dtree::DecisionTree<f64>;
pub type Tree32 = dtree::DecisionTree<f32>;
pub type CartPole = envs::CartPole<f64>;
pub type MountainCar = envs::MountainCar<f64>;
pub type Lander = envs::Lander<f64>;
pub type LearnerConfig = qlearn::LearnerConfig<f64>;
