use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Environment, StepResult};
use crate::error::EnvError;
use crate::scalar::Scalar;
use crate::seed;

/// Adds i.i.d. `N(0, sigma^2)` noise to every observation component.
/// Rewards, termination and the wrapped state are untouched.
#[derive(Debug, Clone)]
pub struct Noisy<E> {
    inner: E,
    sigma: f64,
    rng: ChaCha8Rng,
}

/// Panics if `sigma` is negative or not finite.
pub fn with_noise<E>(env: E, sigma: f64, seed: u64) -> Noisy<E> {
    assert!(
        sigma.is_finite() && sigma >= 0.0,
        "noise sigma must be >= 0"
    );
    Noisy {
        inner: env,
        sigma,
        rng: seed::rng(seed),
    }
}

impl<E> Noisy<E> {
    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn into_inner(self) -> E {
        self.inner
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn perturb<S: Scalar>(&mut self, obs: &mut [S]) {
        if self.sigma == 0.0 {
            return;
        }
        let normal = Normal::new(0.0, self.sigma).expect("valid sigma");
        for x in obs {
            *x = *x + S::lit(normal.sample(&mut self.rng));
        }
    }
}

impl<S: Scalar, E: Environment<S>> Environment<S> for Noisy<E> {
    fn observation_names(&self) -> &'static [&'static str] {
        self.inner.observation_names()
    }

    fn action_names(&self) -> &'static [&'static str] {
        self.inner.action_names()
    }

    fn max_steps(&self) -> usize {
        self.inner.max_steps()
    }

    fn set_max_steps(&mut self, max_steps: usize) {
        self.inner.set_max_steps(max_steps)
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<S> {
        let mut obs = self.inner.reset(rng);
        self.perturb(&mut obs);
        obs
    }

    fn step(&mut self, action: usize) -> Result<StepResult<S>, EnvError> {
        let mut r = self.inner.step(action)?;
        self.perturb(&mut r.observation);
        Ok(r)
    }

    fn state(&self) -> Vec<S> {
        self.inner.state()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{CartPole, MountainCar};

    #[test]
    fn zero_sigma_is_identity() {
        let mut clean = CartPole::<f64>::new();
        let mut noisy = with_noise(CartPole::<f64>::new(), 0.0, 9);
        let a = clean.reset(&mut seed::rng(1));
        let b = noisy.reset(&mut seed::rng(1));
        assert_eq!(a, b);
        for act in [1, 0, 1, 1, 0] {
            assert_eq!(clean.step(act).unwrap(), noisy.step(act).unwrap());
        }
    }

    #[test]
    fn unit_noise_moments() {
        // a pinned state: MountainCar at the left wall with zero velocity
        // stays put under acc_left, so noisy - clean is pure noise
        let mut noisy = with_noise(MountainCar::<f64>::new(), 1.0, 4);
        let n = 100_000;
        let mut samples = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut collected = 0;
        while collected < n {
            noisy.reset(&mut seed::rng(0));
            noisy.inner.set_state(-1.2, 0.0);
            loop {
                let r = noisy.step(0).unwrap();
                let clean = noisy.state();
                for d in 0..2 {
                    samples[d].push(r.observation[d] - clean[d]);
                }
                collected += 1;
                if r.done || collected == n {
                    break;
                }
            }
        }
        for s in &samples {
            let mean = s.iter().sum::<f64>() / n as f64;
            let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.02, "mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 0.02, "std {}", var.sqrt());
        }
    }

    #[test]
    fn wrapped_state_follows_clean_trajectory() {
        let mut clean = CartPole::<f64>::new();
        let mut noisy = with_noise(CartPole::<f64>::new(), 0.5, 3);
        clean.reset(&mut seed::rng(5));
        noisy.reset(&mut seed::rng(5));
        for act in [1, 1, 0, 1, 0, 0, 1] {
            let a = clean.step(act).unwrap();
            let b = noisy.step(act).unwrap();
            assert_eq!(clean.state(), noisy.state());
            assert_eq!((a.reward, a.done), (b.reward, b.done));
            assert_ne!(a.observation, b.observation);
        }
    }
}
