//! Core value types shared by every part of the runtime.
//!
//! Everything here is an immutable value once constructed: policy parameters
//! and the versioned packets that carry them, trajectories produced by actors,
//! evolutionary candidates and their objective vectors. The policy packet byte
//! format in [`wire`] is the one wire contract every transport backend shares.

pub mod candidate;
pub mod error;
pub mod objective;
pub mod params;
pub mod seed;
pub mod trajectory;
pub mod wire;

pub use candidate::{Candidate, CandidateId, Coding, HyperParam};
pub use error::CoreError;
pub use objective::{ObjectiveVector, Sense};
pub use params::{Layer, PolicyPacket, PolicyParams, Version, VersionCounter};
pub use seed::{Rng, SeedTree};
pub use trajectory::{Action, Step, Trajectory};
pub use wire::{deserialize_packet, serialize_packet, WireError};
