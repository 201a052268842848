mod channel;
mod sim;
pub mod socket;

pub use channel::{Channel, ChannelId, Pattern};
pub use sim::{CostModel, Delivery, SimNetwork};

use thiserror::Error;

/// A node in the runtime. Nodes sharing `machine_id` are co-located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub node_id: u32,
    pub machine_id: u32,
}

impl Endpoint {
    pub fn new(node_id: u32, machine_id: u32) -> Self {
        Endpoint {
            node_id,
            machine_id,
        }
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(u32),
    #[error("endpoint {0} registered twice")]
    DuplicateEndpoint(u32),
    #[error("unknown channel {0}")]
    UnknownChannel(usize),
    #[error("invalid cost model: {0}")]
    InvalidCost(String),
    #[error("transport failure: {0}")]
    Failure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
