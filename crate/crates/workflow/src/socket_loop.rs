//! The learner/actor loop over TCP: one thread per actor, wall-clock metrics.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use lmrk_core::wire::{decode_trajectory, encode_trajectory, packet_version, PACKET_MAGIC};
use lmrk_core::{deserialize_packet, serialize_packet, SeedTree};
use lmrk_net::transport::socket::{SocketBackend, SocketNode};
use lmrk_net::TreeTopology;
use lmrk_rl::{Actor, NetShape, RlError};

use crate::config::{RunConfig, Schedule};
use crate::error::WorkflowError;
use crate::metrics::{Reporter, RunMetrics};
use crate::rl_loop::{
    batch_of, budget_spent, build_actors, initial_learner, layout_endpoints, sync_share, RlOutcome, SampleBuffer, Snapshot,
    LEARNER_NODE,
};

const EPISODE_MAGIC: &[u8; 4] = b"LMEP";
const POLL: Duration = Duration::from_millis(20);

fn encode_episodes(returns: &[f64]) -> Vec<u8> {
    let mut out = EPISODE_MAGIC.to_vec();
    out.extend_from_slice(&(returns.len() as u32).to_le_bytes());
    for r in returns {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out
}

fn decode_episodes(bytes: &[u8]) -> Option<Vec<f64>> {
    let n = u32::from_le_bytes(bytes.get(4..8)?.try_into().ok()?) as usize;
    let body = bytes.get(8..)?;
    if body.len() != n * 8 {
        return None;
    }
    Some(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

struct ActorJob {
    node: SocketNode,
    env: Actor,
    children: Vec<u32>,
    held: Arc<Snapshot>,
    shape: NetShape,
    rollout_len: usize,
    share: Option<usize>,
    stop: Arc<AtomicBool>,
}

impl ActorJob {
    /// Forward a policy frame down the tree and keep it if newer.
    fn handle(&mut self, bytes: &[u8]) -> Result<bool, WorkflowError> {
        if bytes.get(..4) != Some(PACKET_MAGIC.as_slice()) {
            return Ok(false);
        }
        for c in &self.children {
            self.node.send(*c, bytes)?;
        }
        let v = packet_version(bytes).map_err(|e| WorkflowError::Runtime(e.to_string()))?;
        if v <= self.held.version {
            return Ok(false);
        }
        let packet = deserialize_packet(bytes).map_err(|e| WorkflowError::Runtime(e.to_string()))?;
        self.held = Snapshot::of(&packet, &self.shape)?;
        Ok(true)
    }

    fn run(mut self) -> Result<(), WorkflowError> {
        let mut owed = self.share.unwrap_or(usize::MAX);
        while !self.stop.load(Ordering::Acquire) {
            while let Some((_, bytes)) = self.node.try_recv() {
                if self.handle(&bytes)? && self.share.is_some() && owed == 0 {
                    owed = self.share.unwrap();
                }
            }
            if owed == 0 {
                if let Some((_, bytes)) = self.node.recv_timeout(POLL)? {
                    if self.handle(&bytes)? {
                        owed = self.share.unwrap();
                    }
                }
                continue;
            }
            let len = self.rollout_len.min(owed);
            let t = self.env.rollout(&self.held.policy, self.held.version, len)?;
            if self.share.is_some() {
                owed -= t.len().min(owed);
            }
            let eps: Vec<f64> = self.env.take_finished().iter().map(|e| e.total_reward).collect();
            if !eps.is_empty() {
                self.node.send(LEARNER_NODE, &encode_episodes(&eps))?;
            }
            self.node.send(LEARNER_NODE, &encode_trajectory(&t))?;
        }
        Ok(())
    }
}

pub fn run_rl_socket(cfg: &RunConfig) -> Result<RlOutcome, WorkflowError> {
    let tree = SeedTree::new(cfg.run.seed);
    let (mut learner, shape) = initial_learner(cfg, tree)?;
    let backend = SocketBackend::new();
    let (root, nodes) = layout_endpoints(cfg.run.actors, cfg.transport.actors_per_machine);
    let topo = TreeTopology::build(cfg.broadcast.layout, &nodes, root)?;
    let learner_node = backend.bind(root, "127.0.0.1:0")?;
    let stop = Arc::new(AtomicBool::new(false));
    let held = Snapshot::of(&learner.packet(), &shape)?;
    let sync = cfg.run.schedule == Schedule::Sync;
    let share = sync_share(cfg.rl.batch_size, cfg.run.actors);
    let mut handles = Vec::new();
    for (e, env) in nodes.iter().zip(build_actors(cfg, tree)?) {
        let job = ActorJob {
            node: backend.bind(*e, "127.0.0.1:0")?,
            env,
            children: topo.children(e.node_id).iter().map(|c| c.node_id).collect(),
            held: held.clone(),
            shape: shape.clone(),
            rollout_len: cfg.run.rollout_len,
            share: sync.then_some(share),
            stop: stop.clone(),
        };
        handles.push(thread::spawn(move || job.run()));
    }

    let start = Instant::now();
    let mut reporter = Reporter::new(cfg.metrics.interval);
    let mut metrics = RunMetrics::default();
    let mut buffer = SampleBuffer::default();
    let mut round_steps = 0;
    let result = (|| -> Result<(), WorkflowError> {
        loop {
            let msg = learner_node.recv_timeout(POLL)?;
            reporter.advance(start.elapsed().as_secs_f64(), &mut metrics);
            if let Some((_, bytes)) = msg {
                if bytes.starts_with(EPISODE_MAGIC) {
                    for r in decode_episodes(&bytes).ok_or_else(|| WorkflowError::Runtime("bad episode frame".into()))? {
                        reporter.episode(r);
                    }
                } else {
                    let t = decode_trajectory(&bytes).map_err(|e| WorkflowError::Runtime(e.to_string()))?;
                    round_steps += t.len();
                    buffer.push(t);
                }
            }
            if handles.iter().any(|h| h.is_finished()) {
                return Err(WorkflowError::Runtime("an actor stopped unexpectedly".into()));
            }
            let want = if sync {
                if round_steps < share * cfg.run.actors {
                    continue;
                }
                round_steps = 0;
                buffer.len()
            } else if buffer.len() >= cfg.rl.batch_size {
                cfg.rl.batch_size
            } else {
                continue;
            };
            let batch = batch_of(cfg, &buffer.take(want))?;
            let out = match learner.update(&batch) {
                Ok(o) => o,
                Err(e @ RlError::NonFiniteLoss { .. }) => {
                    metrics.aborted = Some(e.to_string());
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            metrics.total_frames += want as u64;
            metrics.gradient_steps += out.gradient_steps as u64;
            reporter.staleness(out.staleness.iter().map(|r| r.staleness), &mut metrics);
            if budget_spent(cfg, metrics.total_frames) {
                return Ok(());
            }
            let bytes = serialize_packet(&out.packet);
            for t in topo.root_targets() {
                learner_node.send(t.node_id, &bytes)?;
            }
        }
    })();
    stop.store(true, Ordering::Release);
    let mut actor_err = None;
    for h in handles {
        match h.join() {
            Ok(Ok(())) => {}
            Ok(Err(e)) => actor_err = actor_err.or(Some(e)),
            Err(_) => actor_err = actor_err.or(Some(WorkflowError::Runtime("actor thread panicked".into()))),
        }
    }
    result?;
    if let Some(e) = actor_err {
        return Err(e);
    }
    reporter.finish(start.elapsed().as_secs_f64(), &mut metrics);
    Ok(RlOutcome {
        packet: learner.packet(),
        metrics,
    })
}
