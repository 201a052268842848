//! Deterministic discrete-event network.
//!
//! A node's sends occupy it one after another: the i-th of k back-to-back
//! sends completes (and is delivered) at `i * send_cost` after the first one
//! starts. Simultaneous deliveries are ordered by global send sequence number.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use super::channel::{open_in, Channel, ChannelId, Pattern};
use super::{Endpoint, TransportError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub inter_machine_send_cost: f64,
    pub intra_machine_send_cost: f64,
    pub per_byte_cost: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            inter_machine_send_cost: 1.0,
            intra_machine_send_cost: 0.05,
            per_byte_cost: 0.0,
        }
    }
}

impl CostModel {
    pub fn new(inter: f64, intra: f64, per_byte: f64) -> Result<Self, TransportError> {
        let cost = CostModel {
            inter_machine_send_cost: inter,
            intra_machine_send_cost: intra,
            per_byte_cost: per_byte,
        };
        cost.validate()?;
        Ok(cost)
    }

    /// Every message costs `c`, wherever it goes.
    pub fn uniform(c: f64) -> Self {
        CostModel {
            inter_machine_send_cost: c,
            intra_machine_send_cost: c,
            per_byte_cost: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        let all = [
            self.inter_machine_send_cost,
            self.intra_machine_send_cost,
            self.per_byte_cost,
        ];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(TransportError::InvalidCost(format!(
                "costs must be finite and non-negative: {self:?}"
            )));
        }
        if self.intra_machine_send_cost > self.inter_machine_send_cost {
            return Err(TransportError::InvalidCost(
                "intra-machine cost exceeds inter-machine cost".into(),
            ));
        }
        Ok(())
    }

    pub fn send_cost(&self, from: Endpoint, to: Endpoint, payload_len: usize) -> f64 {
        let base = if from.machine_id == to.machine_id {
            self.intra_machine_send_cost
        } else {
            self.inter_machine_send_cost
        };
        base + self.per_byte_cost * payload_len as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery<M> {
    pub time: f64,
    pub seq: u64,
    pub from: u32,
    pub to: u32,
    pub len: usize,
    pub payload: M,
}

struct Pending<M>(Delivery<M>);

impl<M> PartialEq for Pending<M> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<M> Eq for Pending<M> {}

impl<M> PartialOrd for Pending<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for Pending<M> {
    // reversed: BinaryHeap is a max-heap, we pop the earliest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

pub struct SimNetwork<M> {
    clock: f64,
    cost: CostModel,
    endpoints: BTreeMap<u32, Endpoint>,
    sender_free_at: HashMap<u32, f64>,
    pending: BinaryHeap<Pending<M>>,
    seq: u64,
    channels: Vec<Channel>,
}

impl<M> SimNetwork<M> {
    pub fn new(cost: CostModel) -> Self {
        SimNetwork {
            clock: 0.0,
            cost,
            endpoints: BTreeMap::new(),
            sender_free_at: HashMap::new(),
            pending: BinaryHeap::new(),
            seq: 0,
            channels: Vec::new(),
        }
    }

    pub fn with_endpoints(cost: CostModel, endpoints: &[Endpoint]) -> Result<Self, TransportError> {
        let mut net = SimNetwork::new(cost);
        for e in endpoints {
            net.register(*e)?;
        }
        Ok(net)
    }

    pub fn register(&mut self, endpoint: Endpoint) -> Result<(), TransportError> {
        if self.endpoints.insert(endpoint.node_id, endpoint).is_some() {
            return Err(TransportError::DuplicateEndpoint(endpoint.node_id));
        }
        Ok(())
    }

    pub fn endpoint(&self, node: u32) -> Result<Endpoint, TransportError> {
        self.endpoints
            .get(&node)
            .copied()
            .ok_or(TransportError::UnknownEndpoint(node))
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Time at which `node` has finished all sends queued so far.
    pub fn sender_free_at(&self, node: u32) -> f64 {
        self.sender_free_at
            .get(&node)
            .copied()
            .unwrap_or(0.0)
            .max(self.clock)
    }

    /// Queue a message at the current clock; returns its delivery time.
    pub fn send(&mut self, from: u32, to: u32, payload: M, len: usize) -> Result<f64, TransportError> {
        let src = self.endpoint(from)?;
        let dst = self.endpoint(to)?;
        let start = self.sender_free_at(from);
        let time = start + self.cost.send_cost(src, dst, len);
        self.sender_free_at.insert(from, time);
        self.pending.push(Pending(Delivery {
            time,
            seq: self.seq,
            from,
            to,
            len,
            payload,
        }));
        self.seq += 1;
        Ok(time)
    }

    pub fn next_delivery_time(&self) -> Option<f64> {
        self.pending.peek().map(|p| p.0.time)
    }

    /// Deliver the earliest pending message, advancing the clock to it.
    pub fn pop_next(&mut self) -> Option<Delivery<M>> {
        let d = self.pending.pop()?.0;
        self.clock = self.clock.max(d.time);
        Some(d)
    }

    /// Move the clock forward without delivering anything past `t`.
    pub fn advance_to(&mut self, t: f64) {
        debug_assert!(self.next_delivery_time().is_none_or(|n| n >= t));
        self.clock = self.clock.max(t);
    }

    /// Deliver everything due at or before `t`, in (time, seq) order.
    pub fn run_until(&mut self, t: f64) -> Vec<Delivery<M>> {
        let mut out = Vec::new();
        while self.next_delivery_time().is_some_and(|n| n <= t) {
            out.extend(self.pop_next());
        }
        self.clock = self.clock.max(t);
        out
    }

    /// Declare a channel sourced at `from` (with no sinks yet).
    pub fn declare_channel(&mut self, pattern: Pattern, from: Endpoint) -> Result<ChannelId, TransportError> {
        self.endpoint(from.node_id)?;
        Ok(open_in(&mut self.channels, pattern, from.node_id))
    }

    /// Connect `to` to the channel of `pattern` sourced at `from`. Calls with
    /// the same pattern and source extend one logical channel.
    pub fn open_channel(
        &mut self,
        pattern: Pattern,
        from: Endpoint,
        to: Endpoint,
    ) -> Result<ChannelId, TransportError> {
        self.endpoint(to.node_id)?;
        let id = self.declare_channel(pattern, from)?;
        self.channels[id].attach(to.node_id);
        Ok(id)
    }

    pub fn channel(&self, id: ChannelId) -> Result<&Channel, TransportError> {
        self.channels.get(id).ok_or(TransportError::UnknownChannel(id))
    }

    /// Send one message on a channel; returns the scheduled delivery times.
    pub fn channel_send(&mut self, id: ChannelId, payload: M, len: usize) -> Result<Vec<f64>, TransportError>
    where
        M: Clone,
    {
        let channel = self
            .channels
            .get_mut(id)
            .ok_or(TransportError::UnknownChannel(id))?;
        let from = channel.source();
        let targets = channel.route();
        targets
            .into_iter()
            .map(|to| self.send(from, to, payload.clone(), len))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(endpoints: &[(u32, u32)], cost: CostModel) -> SimNetwork<u32> {
        let eps: Vec<_> = endpoints.iter().map(|&(n, m)| Endpoint::new(n, m)).collect();
        SimNetwork::with_endpoints(cost, &eps).unwrap()
    }

    #[test]
    fn single_send_unit_cost() {
        let mut n = net(&[(0, 0), (1, 1)], CostModel::default());
        assert_eq!(n.send(0, 1, 7, 0).unwrap(), 1.0);
    }

    #[test]
    fn serialized_sender() {
        let mut n = net(&[(0, 0), (1, 1), (2, 2), (3, 3)], CostModel::default());
        let times: Vec<f64> = (1..=3).map(|to| n.send(0, to, to, 0).unwrap()).collect();
        assert_eq!(times, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn intra_machine_is_cheaper() {
        let mut n = net(&[(0, 0), (1, 0)], CostModel::new(1.0, 0.1, 0.0).unwrap());
        assert_eq!(n.send(0, 1, 0, 0).unwrap(), 0.1);
    }

    #[test]
    fn per_byte_cost() {
        let mut n = net(&[(0, 0), (1, 1)], CostModel::new(1.0, 0.1, 0.01).unwrap());
        assert!((n.send(0, 1, 0, 100).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn run_until_empty_and_partial() {
        let mut n = net(&[(0, 0), (1, 1), (2, 2)], CostModel::default());
        assert!(n.run_until(5.0).is_empty());
        assert_eq!(n.clock(), 5.0);
        let mut n = net(&[(0, 0), (1, 1), (2, 2)], CostModel::default());
        n.send(0, 1, 10, 0).unwrap();
        n.send(0, 2, 20, 0).unwrap();
        let got = n.run_until(1.5);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].payload, 10);
        assert_eq!(n.clock(), 1.5);
        assert_eq!(n.run_until(2.0)[0].payload, 20);
    }

    #[test]
    fn interleaved_senders_hand_enumerated() {
        // sender 0 (cost 1): a@1, c@2 ; sender 1 (cost 1): b@1, d@2
        // sends issued in order a, b, c, d => seq 0..3
        // expected: a(1,s0) b(1,s1) c(2,s2) d(2,s3)
        let mut n = net(&[(0, 0), (1, 1), (2, 2), (3, 3)], CostModel::default());
        n.send(0, 2, 'a' as u32, 0).unwrap();
        n.send(1, 3, 'b' as u32, 0).unwrap();
        n.send(0, 3, 'c' as u32, 0).unwrap();
        n.send(1, 2, 'd' as u32, 0).unwrap();
        let order: String = n
            .run_until(10.0)
            .iter()
            .map(|d| char::from_u32(d.payload).unwrap())
            .collect();
        assert_eq!(order, "abcd");
    }

    #[test]
    fn sender_busy_from_earlier_time() {
        let mut n = net(&[(0, 0), (1, 1)], CostModel::default());
        n.send(0, 1, 0, 0).unwrap();
        n.send(0, 1, 1, 0).unwrap();
        n.run_until(0.5);
        // still busy until t=2
        assert_eq!(n.send(0, 1, 2, 0).unwrap(), 3.0);
    }

    #[test]
    fn unknown_endpoint() {
        let mut n = net(&[(0, 0)], CostModel::default());
        assert!(matches!(n.send(0, 9, 0, 0), Err(TransportError::UnknownEndpoint(9))));
        assert!(matches!(
            n.open_channel(Pattern::PubSub, Endpoint::new(0, 0), Endpoint::new(5, 0)),
            Err(TransportError::UnknownEndpoint(5))
        ));
    }

    #[test]
    fn pubsub_and_pushpull_deliveries() {
        let eps = [(0, 0), (1, 1), (2, 2), (3, 3)];
        let mut n = net(&eps, CostModel::default());
        let src = Endpoint::new(0, 0);
        let mut id = 0;
        for s in 1..=3 {
            id = n.open_channel(Pattern::PubSub, src, Endpoint::new(s, s)).unwrap();
        }
        n.channel_send(id, 1, 0).unwrap();
        assert_eq!(n.run_until(100.0).len(), 3);

        let mut n = net(&eps, CostModel::default());
        for s in 1..=3 {
            id = n.open_channel(Pattern::PushPull, src, Endpoint::new(s, s)).unwrap();
        }
        for m in 0..6 {
            n.channel_send(id, m, 0).unwrap();
        }
        let mut per = [0; 4];
        for d in n.run_until(100.0) {
            per[d.to as usize] += 1;
        }
        assert_eq!(per, [0, 2, 2, 2]);

        let mut n = net(&eps, CostModel::default());
        let id = n.declare_channel(Pattern::PubSub, src).unwrap();
        assert!(n.channel_send(id, 0, 0).unwrap().is_empty());
        assert!(n.run_until(100.0).is_empty());
    }

    #[test]
    fn cost_validation() {
        assert!(CostModel::new(-1.0, 0.0, 0.0).is_err());
        assert!(CostModel::new(1.0, 2.0, 0.0).is_err());
        assert!(CostModel::new(1.0, 0.05, 0.0).is_ok());
    }
}
