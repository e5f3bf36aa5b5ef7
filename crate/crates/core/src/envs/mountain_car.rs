use rand::{Rng, RngCore};

use super::{check_action, Environment, StepResult, Termination};
use crate::error::EnvError;
use crate::scalar::Scalar;

pub(crate) const MIN_POSITION: f64 = -1.2;
pub(crate) const MAX_POSITION: f64 = 0.6;
pub(crate) const MAX_SPEED: f64 = 0.07;
const GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// Under-powered car in a valley. Observation `(x, v)`; each step costs 1.
#[derive(Debug, Clone)]
pub struct MountainCar<S> {
    x: S,
    v: S,
    steps: usize,
    max_steps: usize,
    done: bool,
}

impl<S: Scalar> Default for MountainCar<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> MountainCar<S> {
    pub const DEFAULT_MAX_STEPS: usize = 200;

    pub fn new() -> Self {
        MountainCar {
            x: S::lit(-0.5),
            v: S::zero(),
            steps: 0,
            max_steps: Self::DEFAULT_MAX_STEPS,
            done: false,
        }
    }

    pub fn set_state(&mut self, x: S, v: S) {
        self.x = x;
        self.v = v;
        self.steps = 0;
        self.done = false;
    }
}

impl<S: Scalar> Environment<S> for MountainCar<S> {
    fn observation_names(&self) -> &'static [&'static str] {
        &["x", "v"]
    }

    fn action_names(&self) -> &'static [&'static str] {
        &["acc_left", "no_acc", "acc_right"]
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn set_max_steps(&mut self, max_steps: usize) {
        self.max_steps = max_steps;
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<S> {
        self.x = S::lit(rng.random_range(-0.6..-0.4));
        self.v = S::zero();
        self.steps = 0;
        self.done = false;
        vec![self.x, self.v]
    }

    fn step(&mut self, action: usize) -> Result<StepResult<S>, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        check_action(action, 3)?;
        let l = S::lit;
        let push = S::from_usize_lossy(action) - S::one();
        let v = self.v + push * l(FORCE) - l(GRAVITY) * (l(3.0) * self.x).cos();
        self.v = v.max(-l(MAX_SPEED)).min(l(MAX_SPEED));
        self.x = (self.x + self.v).max(l(MIN_POSITION)).min(l(MAX_POSITION));
        if self.x == l(MIN_POSITION) && self.v < S::zero() {
            self.v = S::zero();
        }
        self.steps += 1;
        let info = if self.x >= l(GOAL_POSITION) {
            Some(Termination::Goal)
        } else if self.steps >= self.max_steps {
            Some(Termination::TimeLimit)
        } else {
            None
        };
        self.done = info.is_some();
        Ok(StepResult {
            observation: vec![self.x, self.v],
            reward: -S::one(),
            done: self.done,
            info,
        })
    }

    fn state(&self) -> Vec<S> {
        vec![self.x, self.v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn accelerate_left_from_valley() {
        let mut env = MountainCar::<f64>::new();
        env.set_state(-0.5, 0.0);
        let r = env.step(0).unwrap();
        let v = -0.001 - 0.0025 * (-1.5f64).cos();
        assert_abs_diff_eq!(r.observation[1], v, epsilon = 1e-15);
        assert_abs_diff_eq!(r.observation[1], -0.0011768, epsilon = 1e-7);
        assert_abs_diff_eq!(r.observation[0], -0.5011768, epsilon = 1e-7);
        assert_eq!(r.reward, -1.0);
    }

    #[test]
    fn action_levels_are_linear() {
        let mut env = MountainCar::<f64>::new();
        let mut v = Vec::new();
        for a in 0..3 {
            env.set_state(-0.5, 0.0);
            v.push(env.step(a).unwrap().observation[1]);
        }
        assert_abs_diff_eq!(v[1] - v[0], 0.001, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2] - v[1], 0.001, epsilon = 1e-15);
    }

    #[test]
    fn idle_episode_times_out_at_minus_200() {
        let mut env = MountainCar::<f64>::new();
        env.set_state(-0.5, 0.0);
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let r = env.step(1).unwrap();
            total += r.reward;
            steps += 1;
            if r.done {
                assert_eq!(r.info, Some(Termination::TimeLimit));
                break;
            }
        }
        assert_eq!(steps, 200);
        assert_eq!(total, -200.0);
    }

    #[test]
    fn left_wall_stops_the_car() {
        let mut env = MountainCar::<f64>::new();
        env.set_state(-1.19, -0.07);
        let r = env.step(0).unwrap();
        assert_eq!(r.observation, vec![-1.2, 0.0]);
    }

    proptest! {
        #[test]
        fn clamping_holds(x in -1.2..0.5f64, v in -0.07..0.07f64, actions in prop::collection::vec(0usize..3, 1..50)) {
            let mut env = MountainCar::<f64>::new();
            env.set_state(x, v);
            for a in actions {
                let r = env.step(a).unwrap();
                prop_assert!((MIN_POSITION..=MAX_POSITION).contains(&r.observation[0]));
                prop_assert!((-MAX_SPEED..=MAX_SPEED).contains(&r.observation[1]));
                if r.done { break; }
            }
        }
    }
}
