//! Messaging substrate and broadcast machinery.
//!
//! [`transport`] offers publish-subscribe and push-pull channels over a
//! deterministic discrete-event network ([`transport::SimNetwork`]) or real
//! TCP sockets ([`transport::socket`]). [`broadcast`] builds the machine-grouped
//! broadcast tree and drives learner-to-actor policy distribution over either
//! backend. [`staleness`] turns policy versions into staleness records.

pub mod broadcast;
pub mod staleness;
pub mod transport;

pub use broadcast::{
    broadcast_policy, build_tree, expected_max_delay, flat_topology, BroadcastError,
    DeliveryReport, Layout, TreeTopology,
};
pub use staleness::{mean_staleness, record_staleness, StalenessError, StalenessRecord};
pub use transport::{
    Channel, ChannelId, CostModel, Delivery, Endpoint, Pattern, SimNetwork, TransportError,
};
