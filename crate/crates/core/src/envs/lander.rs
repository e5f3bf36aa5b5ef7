//! Planar lander with flat ground and a pad centred at the origin.
//!
//! Not a rigid-body simulation: the body integrates as a point mass with an
//! attitude, and the ground is a constraint on the two leg tips. Coordinates
//! are already in observation units: the pad is at `(0, 0)` and the body
//! rests upright on it at `p_y = 0`.
//!
//! Reward per step is the change of a shaping potential
//! `-100 |p| - 100 |v| - 100 |theta| + 10 c_l + 10 c_r`, minus fuel (0.3 for
//! the main engine, 0.03 for a side engine), plus -100 on a crash or leaving
//! the area and +100 on coming to rest. The potential is evaluated at reset,
//! so episode totals telescope.

use rand::{Rng, RngCore};

use super::{check_action, Environment, StepResult, Termination};
use crate::error::EnvError;
use crate::scalar::Scalar;

pub const DT: f64 = 0.05;
const GRAVITY: f64 = 0.25;
const MAIN_ACCEL: f64 = 0.6;
const SIDE_ACCEL: f64 = 0.1;
const SIDE_ANGULAR_ACCEL: f64 = 1.0;
/// Leg tips sit at `(±LEG_DX, -LEG_DY)` from the body centre.
const LEG_DX: f64 = 0.12;
const LEG_DY: f64 = 0.1;
/// Lower hull corners at `(±HULL_DX, -HULL_DY)`.
const HULL_DX: f64 = 0.08;
const HULL_DY: f64 = 0.04;
const CRASH_SPEED: f64 = 0.5;
const GROUND_FRICTION: f64 = 0.2;
const REST_SPEED: f64 = 0.02;
const REST_STEPS: usize = 10;
const START_HEIGHT: f64 = 1.4;

pub const MAIN_COST: f64 = 0.3;
pub const SIDE_COST: f64 = 0.03;
pub const TERMINAL_REWARD: f64 = 100.0;
pub const LEG_REWARD: f64 = 10.0;

/// Components of the most recent step's reward.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown<S> {
    /// Potential after the step minus potential before it.
    pub shaping: S,
    /// Fuel cost, zero or negative.
    pub fuel: S,
    /// -100, +100 or 0.
    pub terminal: S,
}

impl<S: Scalar> RewardBreakdown<S> {
    pub fn total(&self) -> S {
        self.shaping + self.fuel + self.terminal
    }
}

#[derive(Debug, Clone)]
pub struct Lander<S> {
    /// `p_x, p_y, v_x, v_y, theta, omega`
    body: [S; 6],
    legs: [bool; 2],
    potential: S,
    rest_steps: usize,
    steps: usize,
    max_steps: usize,
    done: bool,
    last: RewardBreakdown<S>,
    main_firings: usize,
    side_firings: usize,
}

impl<S: Scalar> Default for Lander<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Lander<S> {
    pub const DEFAULT_MAX_STEPS: usize = 1000;

    pub fn new() -> Self {
        let mut l = Lander {
            body: [S::zero(); 6],
            legs: [false; 2],
            potential: S::zero(),
            rest_steps: 0,
            steps: 0,
            max_steps: Self::DEFAULT_MAX_STEPS,
            done: false,
            last: RewardBreakdown::default(),
            main_firings: 0,
            side_firings: 0,
        };
        l.set_body([
            S::zero(),
            S::lit(START_HEIGHT),
            S::zero(),
            S::zero(),
            S::zero(),
            S::zero(),
        ]);
        l
    }

    /// Places the body (`p_x, p_y, v_x, v_y, theta, omega`) and starts a
    /// new episode from there. Leg contact is derived from the geometry.
    pub fn set_body(&mut self, body: [S; 6]) {
        self.body = body;
        self.legs = self.leg_heights().map(|h| h <= S::zero());
        self.potential = self.shaping_potential();
        self.rest_steps = 0;
        self.steps = 0;
        self.done = false;
        self.last = RewardBreakdown::default();
        self.main_firings = 0;
        self.side_firings = 0;
    }

    pub fn observation(&self) -> Vec<S> {
        let mut obs = self.body.to_vec();
        obs.extend(self.legs.map(|c| if c { S::one() } else { S::zero() }));
        obs
    }

    /// Shaping potential of the current state.
    pub fn shaping_potential(&self) -> S {
        let l = S::lit;
        let [px, py, vx, vy, theta, _] = self.body;
        let legs = self.legs.iter().filter(|c| **c).count();
        -l(100.0) * (px * px + py * py).sqrt()
            - l(100.0) * (vx * vx + vy * vy).sqrt()
            - l(100.0) * theta.abs()
            + l(LEG_REWARD) * S::from_usize_lossy(legs)
    }

    pub fn last_reward(&self) -> RewardBreakdown<S> {
        self.last
    }

    /// Main-engine and side-engine firings since the episode started.
    pub fn firings(&self) -> (usize, usize) {
        (self.main_firings, self.side_firings)
    }

    /// Heights above ground of the body-frame points `(-dx, -dy)` and
    /// `(dx, -dy)`. The body centre sits `LEG_DY` above `p_y`, so an upright
    /// body at `p_y = 0` has its leg tips exactly on the ground.
    fn point_heights(&self, dx: f64, dy: f64) -> [S; 2] {
        let (sin, cos) = self.body[4].sin_cos();
        let base = self.body[1] + (S::lit(LEG_DY) - S::lit(dy) * cos);
        [base - S::lit(dx) * sin, base + S::lit(dx) * sin]
    }

    fn leg_heights(&self) -> [S; 2] {
        self.point_heights(LEG_DX, LEG_DY)
    }

    fn hull_heights(&self) -> [S; 2] {
        self.point_heights(HULL_DX, HULL_DY)
    }
}

impl<S: Scalar> Environment<S> for Lander<S> {
    fn observation_names(&self) -> &'static [&'static str] {
        &["p_x", "p_y", "v_x", "v_y", "theta", "omega", "c_l", "c_r"]
    }

    fn action_names(&self) -> &'static [&'static str] {
        &["nop", "left", "main", "right"]
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn set_max_steps(&mut self, max_steps: usize) {
        self.max_steps = max_steps;
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<S> {
        let px = rng.random_range(-0.2..0.2);
        let vx = rng.random_range(-0.3..0.3);
        let vy = rng.random_range(-0.3..0.0);
        let omega = rng.random_range(-0.1..0.1);
        let l = S::lit;
        self.set_body([l(px), l(START_HEIGHT), l(vx), l(vy), S::zero(), l(omega)]);
        self.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult<S>, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        check_action(action, 4)?;
        let l = S::lit;
        let dt = l(DT);
        let [mut px, mut py, mut vx, mut vy, mut theta, mut omega] = self.body;
        let (sin, cos) = theta.sin_cos();

        let mut ax = S::zero();
        let mut ay = -l(GRAVITY);
        let mut alpha = S::zero();
        let mut fuel = S::zero();
        match action {
            2 => {
                ax = ax - l(MAIN_ACCEL) * sin;
                ay = ay + l(MAIN_ACCEL) * cos;
                fuel = -l(MAIN_COST);
                self.main_firings += 1;
            }
            1 | 3 => {
                // left engine pushes right and turns clockwise; right mirrors it
                let dir = if action == 1 { S::one() } else { -S::one() };
                ax = ax + dir * l(SIDE_ACCEL) * cos;
                ay = ay + dir * l(SIDE_ACCEL) * sin;
                alpha = -dir * l(SIDE_ANGULAR_ACCEL);
                fuel = -l(SIDE_COST);
                self.side_firings += 1;
            }
            _ => {}
        }

        vx = vx + ax * dt;
        vy = vy + ay * dt;
        omega = omega + alpha * dt;
        px = px + vx * dt;
        py = py + vy * dt;
        theta = theta + omega * dt;
        self.body = [px, py, vx, vy, theta, omega];

        let mut crashed = self.hull_heights().iter().any(|h| *h <= S::zero());
        let legs = self.leg_heights();
        let contact = legs.map(|h| h <= S::zero());
        if contact[0] || contact[1] {
            if vy < -l(CRASH_SPEED) {
                crashed = true;
            } else {
                let lowest = legs[0].min(legs[1]);
                py = py - lowest;
                vy = vy.max(S::zero());
                vx = vx * (S::one() - l(GROUND_FRICTION));
                omega = omega * l(0.5) - l(4.0) * theta * dt;
                self.body = [px, py, vx, vy, theta, omega];
            }
        }
        self.legs = contact;

        let at_rest = contact[0]
            && contact[1]
            && vx.abs() < l(REST_SPEED)
            && vy.abs() < l(REST_SPEED)
            && omega.abs() < l(REST_SPEED);
        self.rest_steps = if at_rest { self.rest_steps + 1 } else { 0 };
        self.steps += 1;

        let info = if crashed {
            Some(Termination::Crash)
        } else if px.abs() >= S::one() {
            Some(Termination::OutOfBounds)
        } else if self.rest_steps >= REST_STEPS {
            Some(Termination::Rest)
        } else if self.steps >= self.max_steps {
            Some(Termination::TimeLimit)
        } else {
            None
        };
        let terminal = match info {
            Some(Termination::Crash | Termination::OutOfBounds) => -l(TERMINAL_REWARD),
            Some(Termination::Rest) => l(TERMINAL_REWARD),
            _ => S::zero(),
        };
        let potential = self.shaping_potential();
        let shaping = potential - self.potential;
        self.potential = potential;
        self.last = RewardBreakdown {
            shaping,
            fuel,
            terminal,
        };
        self.done = info.is_some();
        Ok(StepResult {
            observation: self.observation(),
            reward: self.last.total(),
            done: self.done,
            info,
        })
    }

    fn state(&self) -> Vec<S> {
        self.observation()
    }
}
