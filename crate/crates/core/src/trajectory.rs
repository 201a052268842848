use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::params::Version;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Action::Continuous(xs) => Some(xs),
            Action::Discrete(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: Vec<f64>,
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
    pub reward: Vec<f64>,
    pub done: bool,
}

/// A rollout segment of one agent, stamped with the policy version that
/// produced it.
///
/// `bootstrap_value` is the critic's estimate for the state following the
/// last step; it is ignored when the last step is terminal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub agent_id: u32,
    pub policy_version: Version,
    pub steps: Vec<Step>,
    pub bootstrap_value: f64,
}

impl Trajectory {
    pub fn new(agent_id: u32, policy_version: Version, steps: Vec<Step>) -> Result<Self, CoreError> {
        if let Some(i) = steps
            .iter()
            .enumerate()
            .position(|(i, s)| s.done && i + 1 != steps.len())
        {
            return Err(CoreError::DoneNotLast(i));
        }
        Ok(Trajectory {
            agent_id,
            policy_version,
            steps,
            bootstrap_value: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_terminal(&self) -> bool {
        self.steps.last().is_some_and(|s| s.done)
    }

    /// Scalar reward per step: the first reward component.
    pub fn scalar_rewards(&self) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.reward.first().copied().unwrap_or(0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(done: bool) -> Step {
        Step {
            state: vec![0.0],
            action: Action::Discrete(0),
            log_prob: 0.0,
            value: 0.0,
            reward: vec![1.0],
            done,
        }
    }

    #[test]
    fn done_only_on_last_step() {
        assert!(Trajectory::new(0, Version(0), vec![step(false), step(true)]).is_ok());
        assert_eq!(
            Trajectory::new(0, Version(0), vec![step(true), step(false)]),
            Err(CoreError::DoneNotLast(0))
        );
    }
}
