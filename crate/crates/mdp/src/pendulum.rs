//! Pendulum-lite: swing a pendulum up and hold it upright with bounded torque.

use std::f64::consts::PI;

use lmrk_core::{Action, Rng};
use rand::Rng as _;

use crate::env::{ActionSpace, Environment, MdpSpec, Role, RoleSpec, Tick};

pub const G: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_TORQUE: f64 = 2.0;
pub const MAX_SPEED: f64 = 8.0;

/// θ = 0 is upright.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// One semi-implicit Euler step. The reward uses the pre-step state.
pub fn pendulum_step(state: PendulumState, torque: f64) -> (PendulumState, f64) {
    let u = torque.clamp(-MAX_TORQUE, MAX_TORQUE);
    let th = wrap_angle(state.theta);
    let reward = -(th * th + 0.1 * state.theta_dot * state.theta_dot + 0.001 * u * u);
    let acc = 3.0 * G / (2.0 * LENGTH) * state.theta.sin() + 3.0 * u / (MASS * LENGTH * LENGTH);
    let theta_dot = (state.theta_dot + acc * DT).clamp(-MAX_SPEED, MAX_SPEED);
    let theta = wrap_angle(state.theta + theta_dot * DT);
    (PendulumState { theta, theta_dot }, reward)
}

pub struct Pendulum {
    spec: MdpSpec,
    state: PendulumState,
    horizon: usize,
}

impl Pendulum {
    pub const HORIZON: usize = 200;

    pub fn new(horizon: usize) -> Self {
        Pendulum {
            spec: MdpSpec {
                roles: vec![RoleSpec {
                    role: Role::Training,
                    observation_dim: 3,
                    action_space: ActionSpace::Continuous {
                        dim: 1,
                        low: -MAX_TORQUE,
                        high: MAX_TORQUE,
                    },
                    reward_dim: 1,
                }],
            },
            state: PendulumState {
                theta: PI,
                theta_dot: 0.0,
            },
            horizon,
        }
    }

    pub fn state(&self) -> PendulumState {
        self.state
    }
}

impl Environment for Pendulum {
    fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Rng) {
        self.state = PendulumState {
            theta: wrap_angle(rng.random_range(-PI..PI)),
            theta_dot: rng.random_range(-1.0..1.0),
        };
    }

    fn observation(&self, _role: usize) -> Vec<f64> {
        vec![self.state.theta.cos(), self.state.theta.sin(), self.state.theta_dot]
    }

    fn default_action(&self, _role: usize) -> Action {
        Action::Continuous(vec![0.0])
    }

    fn tick(&mut self, actions: &[Action]) -> Tick {
        let u = match &actions[0] {
            Action::Continuous(xs) => xs[0],
            Action::Discrete(_) => 0.0,
        };
        let (next, reward) = pendulum_step(self.state, u);
        self.state = next;
        Tick {
            rewards: vec![vec![reward]],
            done: false,
        }
    }

    fn horizon(&self) -> usize {
        self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_equilibrium() {
        let s = PendulumState { theta: 0.0, theta_dot: 0.0 };
        let (next, r) = pendulum_step(s, 0.0);
        assert_eq!(next, s);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn hanging_reward() {
        let (_, r) = pendulum_step(PendulumState { theta: PI, theta_dot: 0.0 }, 0.0);
        assert!((r + 9.8696).abs() < 1e-4);
        assert!((r + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn torque_impulse() {
        let (next, _) = pendulum_step(PendulumState { theta: 0.0, theta_dot: 0.0 }, 2.0);
        assert!((next.theta_dot - 0.3).abs() < 1e-12);
        assert!((next.theta - 0.015).abs() < 1e-12);
    }

    #[test]
    fn torque_and_speed_are_clamped() {
        let (a, _) = pendulum_step(PendulumState { theta: 0.0, theta_dot: 0.0 }, 50.0);
        assert!((a.theta_dot - 0.3).abs() < 1e-12);
        let (b, _) = pendulum_step(PendulumState { theta: 1.0, theta_dot: 7.99 }, 2.0);
        assert_eq!(b.theta_dot, MAX_SPEED);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        for k in -20..20 {
            let w = wrap_angle(k as f64 * 0.7);
            assert!(w > -PI && w <= PI);
        }
    }
}
