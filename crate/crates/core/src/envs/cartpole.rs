use rand::{Rng, RngCore};

use super::{check_action, Environment, StepResult, Termination};
use crate::error::EnvError;
use crate::scalar::Scalar;

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const HALF_LENGTH: f64 = 0.5;
const FORCE: f64 = 10.0;
const TAU: f64 = 0.02;
const X_THRESHOLD: f64 = 2.4;
/// 12 degrees.
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;

/// Pole balancing on a cart, integrated with explicit Euler steps.
///
/// Observation `(x, v, theta, omega)`; actions push the cart left or right
/// with a fixed force. Every step, including the last, pays 1.
#[derive(Debug, Clone)]
pub struct CartPole<S> {
    state: [S; 4],
    steps: usize,
    max_steps: usize,
    done: bool,
}

impl<S: Scalar> Default for CartPole<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> CartPole<S> {
    pub const DEFAULT_MAX_STEPS: usize = 500;

    pub fn new() -> Self {
        CartPole {
            state: [S::zero(); 4],
            steps: 0,
            max_steps: Self::DEFAULT_MAX_STEPS,
            done: false,
        }
    }

    /// Places the system in an arbitrary state and restarts the step count.
    pub fn set_state(&mut self, state: [S; 4]) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    fn advance(&self, action: usize) -> [S; 4] {
        let l = S::lit;
        let [x, v, theta, omega] = self.state;
        let force = if action == 1 { l(FORCE) } else { -l(FORCE) };
        let total_mass = l(CART_MASS + POLE_MASS);
        let pole_mass_length = l(POLE_MASS * HALF_LENGTH);
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_mass_length * omega * omega * sin) / total_mass;
        let theta_acc = (l(GRAVITY) * sin - cos * temp)
            / (l(HALF_LENGTH) * (l(4.0 / 3.0) - l(POLE_MASS) * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;
        let tau = l(TAU);
        [
            x + tau * v,
            v + tau * x_acc,
            theta + tau * omega,
            omega + tau * theta_acc,
        ]
    }
}

impl<S: Scalar> Environment<S> for CartPole<S> {
    fn observation_names(&self) -> &'static [&'static str] {
        &["x", "v", "theta", "omega"]
    }

    fn action_names(&self) -> &'static [&'static str] {
        &["move_left", "move_right"]
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn set_max_steps(&mut self, max_steps: usize) {
        self.max_steps = max_steps;
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<S> {
        for s in &mut self.state {
            *s = S::lit(rng.random_range(-0.05..0.05));
        }
        self.steps = 0;
        self.done = false;
        self.state.to_vec()
    }

    fn step(&mut self, action: usize) -> Result<StepResult<S>, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        check_action(action, 2)?;
        self.state = self.advance(action);
        self.steps += 1;
        let [x, _, theta, _] = self.state;
        let x_lim = S::lit(X_THRESHOLD);
        let t_lim = S::lit(THETA_THRESHOLD);
        let info = if x < -x_lim || x > x_lim || theta < -t_lim || theta > t_lim {
            Some(Termination::Failure)
        } else if self.steps >= self.max_steps {
            Some(Termination::TimeLimit)
        } else {
            None
        };
        self.done = info.is_some();
        Ok(StepResult {
            observation: self.state.to_vec(),
            reward: S::one(),
            done: self.done,
            info,
        })
    }

    fn state(&self) -> Vec<S> {
        self.state.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn push_right_from_rest() {
        let mut env = CartPole::<f64>::new();
        env.set_state([0.0; 4]);
        let r = env.step(1).unwrap();
        // temp = 10/1.1, theta_acc = -temp / (0.5 * (4/3 - 0.1/1.1)),
        // x_acc = temp - 0.05 * theta_acc / 1.1
        let temp = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        let expected = [0.0, 0.02 * x_acc, 0.0, 0.02 * theta_acc];
        for (a, b) in r.observation.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(r.observation[1], 0.19512, epsilon = 1e-5);
        assert_abs_diff_eq!(r.observation[3], -0.29268, epsilon = 1e-5);
        assert_eq!(r.reward, 1.0);
        assert!(!r.done);
    }

    #[test]
    fn push_left_mirrors_push_right() {
        let mut env = CartPole::<f64>::new();
        env.set_state([0.0; 4]);
        let right = env.step(1).unwrap().observation;
        env.set_state([0.0; 4]);
        let left = env.step(0).unwrap().observation;
        for (l, r) in left.iter().zip(&right) {
            assert_eq!(*l, -*r);
        }
    }

    #[test]
    fn terminates_and_refuses_further_steps() {
        let mut env = CartPole::<f64>::new();
        env.set_state([2.39, 1.0, 0.0, 0.0]);
        let r = env.step(1).unwrap();
        assert!(r.done);
        assert_eq!(r.info, Some(Termination::Failure));
        assert_eq!(env.step(1), Err(EnvError::StepAfterDone));
    }

    #[test]
    fn max_steps_truncates() {
        let mut env = CartPole::<f64>::new();
        env.set_max_steps(3);
        env.set_state([0.0; 4]);
        let mut last = None;
        for a in [1, 0, 1] {
            last = Some(env.step(a).unwrap());
        }
        assert_eq!(last.unwrap().info, Some(Termination::TimeLimit));
    }

    #[test]
    fn invalid_action() {
        let mut env = CartPole::<f64>::new();
        env.set_state([0.0; 4]);
        assert_eq!(
            env.step(2),
            Err(EnvError::InvalidAction {
                action: 2,
                count: 2
            })
        );
    }

    proptest! {
        #[test]
        fn odd_symmetry(
            x in -2.0..2.0f64, v in -3.0..3.0f64, t in -0.2..0.2f64, w in -3.0..3.0f64, a in 0usize..2
        ) {
            let mut env = CartPole::<f64>::new();
            env.set_state([x, v, t, w]);
            let fwd = env.step(a).unwrap().observation;
            env.set_state([-x, -v, -t, -w]);
            let mirrored = env.step(1 - a).unwrap().observation;
            for (p, q) in fwd.iter().zip(&mirrored) {
                prop_assert_eq!(*p, -*q);
            }
        }
    }
}
