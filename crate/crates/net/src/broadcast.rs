//! Learner-to-actor policy broadcast.
//!
//! A tree topology has the learner at the root, `d = ceil(sqrt(n))` relays in
//! the second layer and the remaining actors as leaves under the relays, so no
//! node sends more than `d` messages per broadcast. Relays are actors
//! themselves and forward the raw packet bytes unchanged. A flat topology has
//! the root send to every actor directly.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use lmrk_core::{serialize_packet, PolicyPacket};
use thiserror::Error;

use crate::transport::socket::SocketNode;
use crate::transport::{Endpoint, SimNetwork, TransportError};

#[derive(Debug, Error)]
pub enum BroadcastError {
    #[error("cannot build a topology over an empty node set")]
    EmptyNodeSet,
    #[error("root {0} also listed among the nodes")]
    RootInNodes(u32),
    #[error("node {0} listed twice")]
    DuplicateNode(u32),
    #[error("transport failure: {0}")]
    TransportFailure(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Flat,
    Tree,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Flat => "flat",
            Layout::Tree => "tree",
        })
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat" => Ok(Layout::Flat),
            "tree" => Ok(Layout::Tree),
            other => Err(format!("unknown layout `{other}` (expected flat or tree)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeTopology {
    root: Endpoint,
    layout: Layout,
    out_degree: usize,
    relays: Vec<Endpoint>,
    leaves_by_relay: BTreeMap<u32, Vec<Endpoint>>,
    // fed by the root, forward nothing
    direct: Vec<Endpoint>,
}

/// Smallest `d` with `d * d >= n`.
pub fn ceil_sqrt(n: usize) -> usize {
    let mut d = (n as f64).sqrt() as usize;
    while d * d < n {
        d += 1;
    }
    while d > 0 && (d - 1) * (d - 1) >= n {
        d -= 1;
    }
    d
}

fn check_nodes(nodes: &[Endpoint], root: Endpoint) -> Result<(), BroadcastError> {
    if nodes.is_empty() {
        return Err(BroadcastError::EmptyNodeSet);
    }
    let mut seen = HashSet::new();
    for n in nodes {
        if n.node_id == root.node_id {
            return Err(BroadcastError::RootInNodes(root.node_id));
        }
        if !seen.insert(n.node_id) {
            return Err(BroadcastError::DuplicateNode(n.node_id));
        }
    }
    Ok(())
}

/// Build the machine-grouped tree.
///
/// Relays are picked round-robin across machines so they sit on distinct hosts
/// where possible. Relay `i` (in root send order) takes `q` leaves, plus one
/// for the last `r` relays, where `n - d = q * d + r`; leaves go to a relay on
/// their own machine first, then to any relay with room.
pub fn build_tree(nodes: &[Endpoint], root: Endpoint) -> Result<TreeTopology, BroadcastError> {
    check_nodes(nodes, root)?;
    let n = nodes.len();
    let d = ceil_sqrt(n);
    if n == 1 {
        return Ok(TreeTopology {
            root,
            layout: Layout::Tree,
            out_degree: 1,
            relays: Vec::new(),
            leaves_by_relay: BTreeMap::new(),
            direct: nodes.to_vec(),
        });
    }

    let mut by_machine: BTreeMap<u32, Vec<Endpoint>> = BTreeMap::new();
    for e in nodes {
        by_machine.entry(e.machine_id).or_default().push(*e);
    }
    for group in by_machine.values_mut() {
        group.sort_by_key(|e| e.node_id);
    }
    // machine-interleaved order: first node of each machine, then second, ...
    let mut interleaved = Vec::with_capacity(n);
    let mut cursors: Vec<_> = by_machine.values().map(|g| g.iter()).collect();
    while interleaved.len() < n {
        for it in cursors.iter_mut() {
            if let Some(e) = it.next() {
                interleaved.push(*e);
            }
        }
    }
    let relays: Vec<Endpoint> = interleaved[..d].to_vec();
    let relay_set: HashSet<u32> = relays.iter().map(|e| e.node_id).collect();

    let (q, r) = ((n - d) / d, (n - d) % d);
    let capacity: Vec<usize> = (0..d).map(|i| q + usize::from(i >= d - r)).collect();
    let mut assigned: Vec<Vec<Endpoint>> = vec![Vec::new(); d];
    let mut rest = Vec::new();
    // machine-grouped order for leaves keeps co-located nodes together
    for e in by_machine.values().flatten() {
        if relay_set.contains(&e.node_id) {
            continue;
        }
        let home = (0..d).find(|&i| {
            relays[i].machine_id == e.machine_id && assigned[i].len() < capacity[i]
        });
        match home {
            Some(i) => assigned[i].push(*e),
            None => rest.push(*e),
        }
    }
    let mut slot = 0;
    for e in rest {
        while assigned[slot].len() >= capacity[slot] {
            slot = (slot + 1) % d;
        }
        assigned[slot].push(e);
        slot = (slot + 1) % d;
    }

    let leaves_by_relay = relays
        .iter()
        .zip(assigned)
        .map(|(r, leaves)| (r.node_id, leaves))
        .collect();
    Ok(TreeTopology {
        root,
        layout: Layout::Tree,
        out_degree: d,
        relays,
        leaves_by_relay,
        direct: Vec::new(),
    })
}

/// Root sends to every node itself.
pub fn flat_topology(nodes: &[Endpoint], root: Endpoint) -> Result<TreeTopology, BroadcastError> {
    check_nodes(nodes, root)?;
    Ok(TreeTopology {
        root,
        layout: Layout::Flat,
        out_degree: nodes.len(),
        relays: Vec::new(),
        leaves_by_relay: BTreeMap::new(),
        direct: nodes.to_vec(),
    })
}

impl TreeTopology {
    pub fn build(layout: Layout, nodes: &[Endpoint], root: Endpoint) -> Result<Self, BroadcastError> {
        match layout {
            Layout::Flat => flat_topology(nodes, root),
            Layout::Tree => build_tree(nodes, root),
        }
    }

    pub fn root(&self) -> Endpoint {
        self.root
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn out_degree(&self) -> usize {
        self.out_degree
    }

    pub fn relays(&self) -> &[Endpoint] {
        &self.relays
    }

    pub fn leaves_of(&self, relay: u32) -> &[Endpoint] {
        self.leaves_by_relay
            .get(&relay)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Nodes the root sends to, in send order.
    pub fn root_targets(&self) -> impl Iterator<Item = Endpoint> + '_ {
        self.relays.iter().chain(&self.direct).copied()
    }

    /// Nodes `node` forwards to (empty for the root and for leaves).
    pub fn children(&self, node: u32) -> &[Endpoint] {
        self.leaves_of(node)
    }

    /// Every non-root node.
    pub fn nodes(&self) -> Vec<Endpoint> {
        let mut out: Vec<Endpoint> = self.root_targets().collect();
        for r in &self.relays {
            out.extend_from_slice(self.leaves_of(r.node_id));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.relays.len()
            + self.direct.len()
            + self.leaves_by_relay.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of node layers including the root.
    pub fn depth(&self) -> usize {
        if self.leaves_by_relay.values().any(|l| !l.is_empty()) {
            3
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryReport {
    /// Delay from broadcast start until each node held the packet.
    pub per_node: BTreeMap<u32, f64>,
    pub max_delay: f64,
    pub traffic_at_root: usize,
}

/// Enqueue the root's sends; returns immediately with the number of messages
/// the root queued. Relays forward when their copy arrives (see [`forward`]).
pub fn start_broadcast<M: Clone>(
    topo: &TreeTopology,
    net: &mut SimNetwork<M>,
    msg: M,
    len: usize,
) -> Result<usize, TransportError> {
    let root = topo.root.node_id;
    let mut sent = 0;
    for t in topo.root_targets() {
        net.send(root, t.node_id, msg.clone(), len)?;
        sent += 1;
    }
    Ok(sent)
}

/// Called when `node` receives the broadcast: forward it to its children.
pub fn forward<M: Clone>(
    topo: &TreeTopology,
    net: &mut SimNetwork<M>,
    node: u32,
    msg: M,
    len: usize,
) -> Result<usize, TransportError> {
    let children = topo.children(node);
    for c in children {
        net.send(node, c.node_id, msg.clone(), len)?;
    }
    Ok(children.len())
}

/// Broadcast one packet over a dedicated simulated network and report when
/// every node received it.
pub fn broadcast_policy(
    packet: &PolicyPacket,
    topo: &TreeTopology,
    net: &mut SimNetwork<Arc<[u8]>>,
) -> Result<DeliveryReport, BroadcastError> {
    let bytes: Arc<[u8]> = serialize_packet(packet).into();
    let len = bytes.len();
    let start = net.clock();
    let traffic_at_root = start_broadcast(topo, net, bytes, len)?;
    let expected = topo.len();
    let mut per_node = BTreeMap::new();
    while per_node.len() < expected {
        let Some(d) = net.pop_next() else { break };
        if per_node.insert(d.to, d.time - start).is_none() {
            forward(topo, net, d.to, d.payload, d.len)?;
        }
    }
    Ok(DeliveryReport {
        max_delay: per_node.values().copied().fold(0.0, f64::max),
        per_node,
        traffic_at_root,
    })
}

/// Broadcast over real sockets. Every non-root node runs a forwarding thread
/// for the duration of the call; delays are wall-clock seconds.
pub fn broadcast_policy_socket(
    packet: &PolicyPacket,
    topo: &TreeTopology,
    root: &SocketNode,
    nodes: Vec<SocketNode>,
    timeout: Duration,
) -> Result<(DeliveryReport, Vec<SocketNode>), BroadcastError> {
    let bytes = serialize_packet(packet);
    let children: HashMap<u32, Vec<u32>> = topo
        .nodes()
        .iter()
        .map(|e| (e.node_id, topo.children(e.node_id).iter().map(|c| c.node_id).collect()))
        .collect();
    let start = Instant::now();
    let handles: Vec<_> = nodes
        .into_iter()
        .map(|node| {
            let kids = children.get(&node.endpoint().node_id).cloned().unwrap_or_default();
            thread::spawn(move || -> (SocketNode, Result<f64, TransportError>) {
                let got = match node.recv_timeout(timeout) {
                    Ok(Some((_, body))) => body,
                    Ok(None) => {
                        return (node, Err(TransportError::Failure("broadcast timed out".into())))
                    }
                    Err(e) => return (node, Err(e)),
                };
                let at = start.elapsed().as_secs_f64();
                for k in kids {
                    if let Err(e) = node.send(k, &got) {
                        return (node, Err(e));
                    }
                }
                (node, Ok(at))
            })
        })
        .collect();
    let mut traffic_at_root = 0;
    for t in topo.root_targets() {
        root.send(t.node_id, &bytes)?;
        traffic_at_root += 1;
    }
    let mut per_node = BTreeMap::new();
    let mut back = Vec::new();
    let mut failure = None;
    for h in handles {
        let (node, res) = h.join().expect("forwarding thread panicked");
        match res {
            Ok(at) => {
                per_node.insert(node.endpoint().node_id, at);
            }
            Err(e) => failure = Some(e),
        }
        back.push(node);
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok((
        DeliveryReport {
            max_delay: per_node.values().copied().fold(0.0, f64::max),
            per_node,
            traffic_at_root,
        },
        back,
    ))
}

/// Closed-form worst-case delivery delay under uniform per-message cost `c`.
pub fn expected_max_delay(n: usize, layout: Layout, out_degree: usize, c: f64) -> f64 {
    assert!(n >= 1, "need at least one node");
    match layout {
        Layout::Flat => n as f64 * c,
        Layout::Tree => {
            let d = out_degree.max(1);
            (d + (n - d.min(n)).div_ceil(d)) as f64 * c
        }
    }
}
