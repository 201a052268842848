use lmrk_core::{Layer, PolicyPacket, PolicyParams, Version};
use lmrk_net::{broadcast_policy, CostModel, Endpoint, Layout, SimNetwork, TreeTopology};

use crate::error::WorkflowError;

pub const BENCH_HEADER: [&str; 5] = ["n", "layout", "out_degree", "max_delay", "root_traffic"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub layout: Layout,
    pub out_degree: usize,
    pub max_delay: f64,
    pub root_traffic: usize,
}

/// Broadcast one small packet to `n` actors, each on its own machine, and
/// measure the delivery delay under `cost`.
pub fn bench_broadcast(sizes: &[usize], layouts: &[Layout], cost: CostModel) -> Result<Vec<BenchRow>, WorkflowError> {
    let packet = PolicyPacket::new(Version(1), PolicyParams::new(vec![Layer::zeros(1, 1)]).expect("valid layer"));
    let mut rows = Vec::new();
    for &n in sizes {
        let root = Endpoint::new(0, 0);
        let nodes: Vec<Endpoint> = (1..=n as u32).map(|i| Endpoint::new(i, i)).collect();
        for &layout in layouts {
            let topo = TreeTopology::build(layout, &nodes, root)?;
            let mut all = vec![root];
            all.extend(&nodes);
            let mut net = SimNetwork::with_endpoints(cost, &all)?;
            let report = broadcast_policy(&packet, &topo, &mut net)?;
            rows.push(BenchRow {
                n,
                layout,
                out_degree: topo.out_degree(),
                max_delay: report.max_delay,
                root_traffic: report.traffic_at_root,
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.layout.to_string(),
            r.out_degree.to_string(),
            r.max_delay.to_string(),
            r.root_traffic.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
