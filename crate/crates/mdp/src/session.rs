use lmrk_core::{Action, ObjectiveVector, Rng, SeedTree};
use thiserror::Error;

use crate::env::{EnvConfig, Environment, MdpSpec, Role};
use crate::pendulum::Pendulum;
use crate::ponglite::PongLite;

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("unknown environment {0:?}")]
    UnknownEnv(String),
    #[error("bad environment config: {0}")]
    BadConfig(String),
    #[error("action {action:?} outside the space of controller {controller}")]
    ActionOutOfRange { controller: usize, action: Action },
    #[error("controller {0} acted after its episode ended")]
    ActAfterDone(usize),
    #[error("controller {controller}: {what}")]
    ProtocolViolation { controller: usize, what: &'static str },
    #[error("controller {0} does not belong to this session")]
    UnknownController(usize),
}

/// Handle for one agent of an environment instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Controller {
    pub index: usize,
    pub agent_id: u32,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    /// `None` for sparring controllers and for the first observation of an episode.
    pub reward: Option<ObjectiveVector>,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickStatus {
    /// The action is queued until the other controllers act or the tick is forced.
    Pending,
    Advanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Observe,
    Act,
}

#[derive(Debug)]
struct Slot {
    role: Role,
    phase: Phase,
    submitted: Option<Action>,
    latest: StepResult,
}

/// One environment instance plus the controller protocol state.
pub struct Session {
    env: Box<dyn Environment>,
    slots: Vec<Slot>,
    rng: Rng,
    ticks: u64,
    episode_ticks: usize,
    done: bool,
    defaulted: u64,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("ticks", &self.ticks)
            .field("episode_ticks", &self.episode_ticks)
            .field("done", &self.done)
            .finish()
    }
}

/// Instantiate a registered environment and return its controllers, one per role.
pub fn spawn(env_name: &str, config: &EnvConfig, seed: u64) -> Result<(Session, Vec<Controller>), MdpError> {
    if let Some(h) = config.horizon {
        if h == 0 {
            return Err(MdpError::BadConfig("horizon must be at least 1".into()));
        }
    }
    let env: Box<dyn Environment> = match env_name {
        "pendulum" => {
            if config.sparring_epsilon.is_some() {
                return Err(MdpError::BadConfig("pendulum has no sparring agent".into()));
            }
            Box::new(Pendulum::new(config.horizon.unwrap_or(Pendulum::HORIZON)))
        }
        "ponglite" => {
            if let Some(e) = config.sparring_epsilon {
                if !(0.0..=1.0).contains(&e) {
                    return Err(MdpError::BadConfig(format!("sparring_epsilon {e} outside [0, 1]")));
                }
            }
            Box::new(PongLite::new(config.horizon.unwrap_or(PongLite::HORIZON)))
        }
        other => return Err(MdpError::UnknownEnv(other.to_string())),
    };
    let session = Session::new(env, SeedTree::new(seed).child("env").rng());
    let controllers = session.controllers();
    Ok((session, controllers))
}

impl Session {
    pub fn new(mut env: Box<dyn Environment>, mut rng: Rng) -> Self {
        env.reset(&mut rng);
        let roles: Vec<Role> = env.spec().roles.iter().map(|r| r.role).collect();
        let slots = roles
            .iter()
            .enumerate()
            .map(|(i, &role)| Slot {
                role,
                phase: Phase::Observe,
                submitted: None,
                latest: StepResult {
                    observation: env.observation(i),
                    reward: None,
                    done: false,
                },
            })
            .collect();
        Session {
            env,
            slots,
            rng,
            ticks: 0,
            episode_ticks: 0,
            done: false,
            defaulted: 0,
        }
    }

    pub fn controllers(&self) -> Vec<Controller> {
        self.slots
            .iter()
            .enumerate()
            .map(|(i, s)| Controller {
                index: i,
                agent_id: i as u32,
                role: s.role,
            })
            .collect()
    }

    pub fn spec(&self) -> &MdpSpec {
        self.env.spec()
    }

    pub fn horizon(&self) -> usize {
        self.env.horizon()
    }

    /// Ticks since the session was created, across episodes.
    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn episode_ticks(&self) -> usize {
        self.episode_ticks
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// How many laggard actions were filled with defaults so far.
    pub fn defaulted_actions(&self) -> u64 {
        self.defaulted
    }

    /// Start a new episode. Every controller goes back to expecting `observe`.
    pub fn reset(&mut self) {
        self.env.reset(&mut self.rng);
        self.done = false;
        self.episode_ticks = 0;
        for (i, s) in self.slots.iter_mut().enumerate() {
            s.phase = Phase::Observe;
            s.submitted = None;
            s.latest = StepResult {
                observation: self.env.observation(i),
                reward: None,
                done: false,
            };
        }
    }

    fn slot(&self, c: &Controller) -> Result<&Slot, MdpError> {
        self.slots.get(c.index).ok_or(MdpError::UnknownController(c.index))
    }

    /// Latest result for this controller. If its previous action is still
    /// waiting on other controllers, the tick is forced first.
    pub fn observe(&mut self, c: &Controller) -> Result<StepResult, MdpError> {
        let slot = self.slot(c)?;
        if slot.phase != Phase::Observe {
            return Err(MdpError::ProtocolViolation {
                controller: c.index,
                what: "observe called twice without act",
            });
        }
        if slot.submitted.is_some() {
            self.advance();
        }
        let slot = &mut self.slots[c.index];
        slot.phase = Phase::Act;
        Ok(slot.latest.clone())
    }

    /// Submit an action. The tick runs once every controller has submitted.
    pub fn act(&mut self, c: &Controller, action: Action) -> Result<TickStatus, MdpError> {
        let slot = self.slot(c)?;
        if self.done {
            return Err(MdpError::ActAfterDone(c.index));
        }
        if slot.phase != Phase::Act {
            return Err(MdpError::ProtocolViolation {
                controller: c.index,
                what: "act called without a preceding observe",
            });
        }
        if !self.env.spec().roles[c.index].action_space.contains(&action) {
            return Err(MdpError::ActionOutOfRange {
                controller: c.index,
                action,
            });
        }
        let slot = &mut self.slots[c.index];
        slot.submitted = Some(action);
        slot.phase = Phase::Observe;
        if self.slots.iter().all(|s| s.submitted.is_some()) {
            self.advance();
            Ok(TickStatus::Advanced)
        } else {
            Ok(TickStatus::Pending)
        }
    }

    fn advance(&mut self) {
        let mut actions = Vec::with_capacity(self.slots.len());
        for (i, s) in self.slots.iter_mut().enumerate() {
            actions.push(match s.submitted.take() {
                Some(a) => a,
                None => {
                    self.defaulted += 1;
                    self.env.default_action(i)
                }
            });
        }
        let tick = self.env.tick(&actions);
        self.ticks += 1;
        self.episode_ticks += 1;
        self.done = tick.done || self.episode_ticks >= self.env.horizon();
        for (i, (s, r)) in self.slots.iter_mut().zip(tick.rewards).enumerate() {
            s.latest = StepResult {
                observation: self.env.observation(i),
                reward: match s.role {
                    Role::Training => {
                    Some(ObjectiveVector::maximize(r).expect("environment rewards are finite"))
                }
                    Role::Sparring => None,
                },
                done: self.done,
            };
        }
    }
}
