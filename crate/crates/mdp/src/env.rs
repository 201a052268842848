use lmrk_core::{Action, Rng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous { dim: usize, low: f64, high: f64 },
}

impl ActionSpace {
    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete(k), Action::Discrete(a)) => a < k,
            (ActionSpace::Continuous { dim, low, high }, Action::Continuous(xs)) => {
                xs.len() == *dim && xs.iter().all(|x| (*low..=*high).contains(x))
            }
            _ => false,
        }
    }

    /// Width of the policy head output for this space.
    pub fn width(&self) -> usize {
        match self {
            ActionSpace::Discrete(k) => *k,
            ActionSpace::Continuous { dim, .. } => *dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Training,
    Sparring,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleSpec {
    pub role: Role,
    pub observation_dim: usize,
    pub action_space: ActionSpace,
    /// 0 for sparring roles.
    pub reward_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec {
    pub roles: Vec<RoleSpec>,
}

impl MdpSpec {
    pub fn training_role(&self) -> Option<usize> {
        self.roles.iter().position(|r| r.role == Role::Training)
    }
}

/// Result of one environment tick: one reward vector per role (empty for
/// sparring roles) and whether the episode ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub rewards: Vec<Vec<f64>>,
    pub done: bool,
}

/// A synchronous environment core; [`crate::Session`] adds the asynchronous
/// controller protocol on top.
pub trait Environment: Send {
    fn spec(&self) -> &MdpSpec;
    fn reset(&mut self, rng: &mut Rng);
    fn observation(&self, role: usize) -> Vec<f64>;
    fn default_action(&self, role: usize) -> Action;
    /// Advance one tick with one (validated) action per role.
    fn tick(&mut self, actions: &[Action]) -> Tick;
    fn horizon(&self) -> usize;
}

/// The `[env]` section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Episode length cap in ticks (pendulum: 200; ponglite: 1000).
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Probability that the scripted sparring agent moves at random.
    #[serde(default)]
    pub sparring_epsilon: Option<f64>,
}

impl EnvConfig {
    pub fn named(name: &str) -> Self {
        EnvConfig {
            name: name.to_string(),
            seed: None,
            horizon: None,
            sparring_epsilon: None,
        }
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::named("pendulum")
    }
}
