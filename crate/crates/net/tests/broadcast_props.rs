use std::collections::HashMap;
use std::sync::Arc;

use lmrk_core::{Layer, PolicyPacket, PolicyParams, Version};
use lmrk_net::broadcast::ceil_sqrt;
use lmrk_net::{
    broadcast_policy, expected_max_delay, CostModel, Endpoint, Layout, SimNetwork, TreeTopology,
};
use proptest::prelude::*;

fn report(layout: Layout, nodes: &[Endpoint], cost: CostModel) -> (TreeTopology, lmrk_net::DeliveryReport) {
    let root = Endpoint::new(0, u32::MAX);
    let topo = TreeTopology::build(layout, nodes, root).unwrap();
    let mut all = nodes.to_vec();
    all.push(root);
    let mut net = SimNetwork::with_endpoints(cost, &all).unwrap();
    let p = PolicyPacket::new(Version(3), PolicyParams::new(vec![Layer::zeros(4, 2)]).unwrap());
    let rep = broadcast_policy(&p, &topo, &mut net).unwrap();
    (topo, rep)
}

fn distinct(n: usize) -> Vec<Endpoint> {
    (1..=n as u32).map(|i| Endpoint::new(i, i)).collect()
}

#[test]
fn formula_matches_simulation_for_every_n_up_to_400() {
    for n in 1..=400 {
        let nodes = distinct(n);
        let (topo, tree) = report(Layout::Tree, &nodes, CostModel::uniform(1.0));
        let d = ceil_sqrt(n);
        assert_eq!(topo.out_degree(), d);
        assert!(topo.depth() <= 3);
        assert_eq!(topo.len(), n);
        assert_eq!(tree.per_node.len(), n, "every node reached, n={n}");
        assert_eq!(tree.traffic_at_root, d);
        assert_eq!(tree.max_delay, expected_max_delay(n, Layout::Tree, d, 1.0), "n={n}");

        let (_, flat) = report(Layout::Flat, &nodes, CostModel::uniform(1.0));
        assert_eq!(flat.traffic_at_root, n);
        assert_eq!(flat.max_delay, expected_max_delay(n, Layout::Flat, n, 1.0));
        if n >= 4 {
            assert!(tree.max_delay < flat.max_delay, "n={n}");
        }
    }
    let (_, tree) = report(Layout::Tree, &distinct(100), CostModel::uniform(1.0));
    assert!(tree.max_delay / 100.0 <= 0.25);
}

proptest! {
    #[test]
    fn every_node_appears_once(n in 1usize..300, machines in 1u32..20) {
        let nodes: Vec<Endpoint> = (1..=n as u32).map(|i| Endpoint::new(i, i % machines)).collect();
        let topo = TreeTopology::build(Layout::Tree, &nodes, Endpoint::new(0, 0)).unwrap();
        let mut seen: Vec<u32> = topo.nodes().iter().map(|e| e.node_id).collect();
        seen.sort_unstable();
        let want: Vec<u32> = (1..=n as u32).collect();
        prop_assert_eq!(seen, want);
        prop_assert!(topo.depth() <= 3);
        prop_assert_eq!(topo.root_targets().count(), ceil_sqrt(n));
    }

    #[test]
    fn fifo_per_pair_and_deterministic(
        script in prop::collection::vec((0u32..4, 0u32..4, 0usize..500), 1..80),
    ) {
        let run = || {
            let eps: Vec<Endpoint> = (0..4).map(|i| Endpoint::new(i, i / 2)).collect();
            let mut net: SimNetwork<usize> =
                SimNetwork::with_endpoints(CostModel::new(1.0, 0.05, 0.001).unwrap(), &eps).unwrap();
            for (k, &(from, to, len)) in script.iter().enumerate() {
                net.send(from, to, k, len).unwrap();
                if k % 7 == 3 {
                    net.run_until(net.clock() + 0.5);
                }
            }
            let mut out = Vec::new();
            while let Some(d) = net.pop_next() {
                out.push((d.time, d.from, d.to, d.payload));
            }
            out
        };
        let trace = run();
        prop_assert_eq!(&trace, &run());
        // delivery times never decrease, and sends on one pair keep their order
        prop_assert!(trace.windows(2).all(|w| w[0].0 <= w[1].0));
        let mut last: HashMap<(u32, u32), usize> = HashMap::new();
        for &(_, from, to, k) in &trace {
            if let Some(prev) = last.insert((from, to), k) {
                prop_assert!(prev < k);
            }
        }
    }
}

#[test]
fn raw_bytes_are_forwarded_unchanged() {
    let nodes = distinct(9);
    let root = Endpoint::new(0, 0);
    let topo = TreeTopology::build(Layout::Tree, &nodes, root).unwrap();
    let mut all = nodes.clone();
    all.push(root);
    let mut net: SimNetwork<Arc<[u8]>> = SimNetwork::with_endpoints(CostModel::default(), &all).unwrap();
    let p = PolicyPacket::new(Version(9), PolicyParams::new(vec![Layer::zeros(3, 3)]).unwrap());
    let bytes: Arc<[u8]> = lmrk_core::serialize_packet(&p).into();
    lmrk_net::broadcast::start_broadcast(&topo, &mut net, bytes.clone(), bytes.len()).unwrap();
    let mut got = 0;
    while let Some(d) = net.pop_next() {
        assert_eq!(&*d.payload, &*bytes);
        lmrk_net::broadcast::forward(&topo, &mut net, d.to, d.payload, d.len).unwrap();
        got += 1;
    }
    assert_eq!(got, 9);
}
