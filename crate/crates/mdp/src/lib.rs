//! Asynchronous MDP interface.
//!
//! An environment instance is driven through one [`Controller`] per agent.
//! Training controllers receive reward vectors, sparring controllers only
//! observations. Each controller alternates `observe` and `act`; the
//! environment ticks once every live controller has acted, or earlier when a
//! controller that already acted comes back to observe: laggards are then
//! given their default action (zero torque, "stay") and the tick goes ahead
//! without them.

mod env;
pub mod pendulum;
pub mod ponglite;
mod session;

pub use env::{ActionSpace, EnvConfig, Environment, MdpSpec, Role, RoleSpec, Tick};
pub use pendulum::{pendulum_step, Pendulum, PendulumState};
pub use ponglite::{ponglite_step, scripted_sparring_policy, Move, PongLite, PongState, ScriptedSparring};
pub use session::{spawn, Controller, MdpError, Session, StepResult, TickStatus};
