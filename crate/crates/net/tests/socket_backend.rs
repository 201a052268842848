use std::collections::BTreeMap;
use std::time::Duration;

use lmrk_core::{deserialize_packet, Layer, PolicyPacket, PolicyParams, Version};
use lmrk_net::broadcast::broadcast_policy_socket;
use lmrk_net::transport::socket::SocketBackend;
use lmrk_net::{CostModel, Endpoint, Layout, Pattern, SimNetwork, TreeTopology};

/// (pattern, source, payload) triples sent in order.
fn script() -> Vec<(Pattern, u32, Vec<u8>)> {
    let mut s = Vec::new();
    for i in 0..4u8 {
        s.push((Pattern::PubSub, 0, vec![b'p', i]));
    }
    for i in 0..9u8 {
        s.push((Pattern::PushPull, 1, vec![b'q', i]));
    }
    s
}

fn wiring() -> (Vec<Endpoint>, Vec<(Pattern, u32, u32)>) {
    let eps: Vec<Endpoint> = (0..5).map(|i| Endpoint::new(i, 0)).collect();
    let links = vec![
        (Pattern::PubSub, 0, 2),
        (Pattern::PubSub, 0, 3),
        (Pattern::PubSub, 0, 4),
        (Pattern::PushPull, 1, 2),
        (Pattern::PushPull, 1, 3),
        (Pattern::PushPull, 1, 4),
    ];
    (eps, links)
}

type Multiset = BTreeMap<(u32, u32, Vec<u8>), usize>;

#[test]
fn socket_and_sim_deliver_the_same_multiset() {
    let (eps, links) = wiring();

    let mut net: SimNetwork<Vec<u8>> = SimNetwork::with_endpoints(CostModel::uniform(0.0), &eps).unwrap();
    let mut ids = BTreeMap::new();
    for &(pat, from, to) in &links {
        let id = net.open_channel(pat, eps[from as usize], eps[to as usize]).unwrap();
        ids.insert((pat as u8, from), id);
    }
    for (pat, from, payload) in script() {
        let len = payload.len();
        net.channel_send(ids[&(pat as u8, from)], payload, len).unwrap();
    }
    let mut sim = Multiset::new();
    for d in net.run_until(f64::INFINITY) {
        *sim.entry((d.from, d.to, d.payload)).or_default() += 1;
    }

    let backend = SocketBackend::new();
    let nodes: Vec<_> = eps.iter().map(|e| backend.bind(*e, "127.0.0.1:0").unwrap()).collect();
    let mut sids = BTreeMap::new();
    for &(pat, from, to) in &links {
        let id = backend.open_channel(pat, eps[from as usize], eps[to as usize]).unwrap();
        sids.insert((pat as u8, from), id);
    }
    for (pat, from, payload) in script() {
        backend
            .channel_send(&nodes[from as usize], sids[&(pat as u8, from)], &payload)
            .unwrap();
    }
    let total: usize = sim.values().sum();
    let mut sock = Multiset::new();
    let mut got = 0;
    let deadline = std::time::Instant::now() + Duration::from_secs(20);
    while got < total {
        assert!(std::time::Instant::now() < deadline, "only {got} of {total} frames arrived");
        for n in &nodes {
            if let Some((from, body)) = n.recv_timeout(Duration::from_millis(20)).unwrap() {
                *sock.entry((from, n.endpoint().node_id, body)).or_default() += 1;
                got += 1;
            }
        }
    }
    assert_eq!(total, 4 * 3 + 9);
    assert_eq!(sim, sock);
}

#[test]
fn socket_tree_broadcast_reaches_everyone() {
    let backend = SocketBackend::new();
    let root_ep = Endpoint::new(0, 0);
    let eps: Vec<Endpoint> = (1..=9).map(|i| Endpoint::new(i, i % 3)).collect();
    let root = backend.bind(root_ep, "127.0.0.1:0").unwrap();
    let nodes: Vec<_> = eps.iter().map(|e| backend.bind(*e, "127.0.0.1:0").unwrap()).collect();
    let topo = TreeTopology::build(Layout::Tree, &eps, root_ep).unwrap();
    let p = PolicyPacket::new(Version(5), PolicyParams::new(vec![Layer::zeros(8, 8)]).unwrap());
    let (report, nodes) =
        broadcast_policy_socket(&p, &topo, &root, nodes, Duration::from_secs(10)).unwrap();
    assert_eq!(report.per_node.len(), 9);
    assert_eq!(report.traffic_at_root, 3);
    assert_eq!(nodes.len(), 9);
    // the wire format is shared verbatim: a relay's copy decodes to the packet
    let (report, nodes) =
        broadcast_policy_socket(&p, &topo, &root, nodes, Duration::from_secs(10)).unwrap();
    assert!(report.max_delay >= 0.0);
    drop(nodes);
    assert!(deserialize_packet(&lmrk_core::serialize_packet(&p)).unwrap().same_content(&p));
}
