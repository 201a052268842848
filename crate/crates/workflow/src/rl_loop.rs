//! Learner/actor PPO loop with policy broadcast and trajectory gathering.
//!
//! On the simulated transport everything runs in one thread as a discrete
//! event simulation: actors take `frame_cost` simulated seconds per step,
//! learner updates take `learner_cost_per_sample` per sample and pass, and
//! messages pay the transport cost model. The socket transport runs every
//! actor in its own thread and measures wall-clock time instead.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::Arc;

use lmrk_core::{serialize_packet, PolicyPacket, SeedTree, Trajectory, Version};
use lmrk_evaluator::{make_actor, shape_for_env};
use lmrk_net::broadcast::{forward, start_broadcast};
use lmrk_net::{Endpoint, SimNetwork, TreeTopology};
use lmrk_rl::{Actor, Learner, MlpPolicy, NetShape, RewardMap, RlError, TrainBatch, UpdateOutcome};

use crate::config::{RunConfig, Schedule, TransportKind};
use crate::error::WorkflowError;
use crate::metrics::{Reporter, RunMetrics};

pub const LEARNER_NODE: u32 = 0;

#[derive(Debug, Clone)]
pub struct RlOutcome {
    pub packet: PolicyPacket,
    pub metrics: RunMetrics,
}

/// Run PPO per the configuration's `[run]`, `[rl]`, `[transport]` and
/// `[broadcast]` sections. A non-finite loss stops the run early; the
/// metrics collected so far come back with `aborted` set.
pub fn run_rl(cfg: &RunConfig) -> Result<RlOutcome, WorkflowError> {
    cfg.validate()?;
    match cfg.transport.kind {
        TransportKind::Simulated => SimRun::new(cfg)?.run(),
        TransportKind::Socket => crate::socket_loop::run_rl_socket(cfg),
    }
}

/// Actor `i` is node `i + 1`; actors fill machines `actors_per_machine` at a
/// time and the learner sits alone on machine 0.
pub fn layout_endpoints(actors: usize, per_machine: usize) -> (Endpoint, Vec<Endpoint>) {
    let nodes = (0..actors)
        .map(|i| Endpoint::new(i as u32 + 1, 1 + (i / per_machine) as u32))
        .collect();
    (Endpoint::new(LEARNER_NODE, 0), nodes)
}

/// Steps the sync schedule asks of each actor per round.
pub fn sync_share(batch: usize, actors: usize) -> usize {
    batch.div_ceil(actors)
}

/// True once another batch would overrun `[run] frames`; runs stop at the
/// last whole batch inside the budget.
pub(crate) fn budget_spent(cfg: &RunConfig, consumed: u64) -> bool {
    let next = match cfg.run.schedule {
        Schedule::Async => cfg.rl.batch_size,
        Schedule::Sync => sync_share(cfg.rl.batch_size, cfg.run.actors) * cfg.run.actors,
    };
    consumed + next as u64 > cfg.run.frames
}

pub(crate) fn build_actors(cfg: &RunConfig, tree: SeedTree) -> Result<Vec<Actor>, RlError> {
    (0..cfg.run.actors)
        .map(|i| make_actor(&cfg.env, i as u32 + 1, tree.child("actors").index(i as u64)))
        .collect()
}

pub(crate) fn initial_learner(cfg: &RunConfig, tree: SeedTree) -> Result<(Learner, NetShape), RlError> {
    let shape = shape_for_env(&cfg.env.name)?;
    let policy = MlpPolicy::new(shape.clone(), &mut tree.child("init").rng());
    Ok((Learner::new(policy, cfg.rl.clone(), Version(0), tree.child("learner").rng())?, shape))
}

/// Queue of trajectory pieces waiting for the learner.
#[derive(Debug, Default)]
pub(crate) struct SampleBuffer {
    pieces: VecDeque<Trajectory>,
    len: usize,
}

impl SampleBuffer {
    pub fn push(&mut self, t: Trajectory) {
        self.len += t.len();
        self.pieces.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Take exactly `n` steps, splitting a trajectory when needed. The cut
    /// piece bootstraps from the value of the first step left behind.
    pub fn take(&mut self, n: usize) -> Vec<Trajectory> {
        let mut out = Vec::new();
        let mut need = n.min(self.len);
        while need > 0 {
            let mut t = self.pieces.pop_front().expect("length accounted");
            if t.len() <= need {
                need -= t.len();
                self.len -= t.len();
                out.push(t);
                continue;
            }
            let rest = t.steps.split_off(need);
            let head = Trajectory {
                agent_id: t.agent_id,
                policy_version: t.policy_version,
                bootstrap_value: rest[0].value,
                steps: std::mem::take(&mut t.steps),
            };
            t.steps = rest;
            self.len -= need;
            need = 0;
            out.push(head);
            self.pieces.push_front(t);
        }
        out
    }
}

pub(crate) fn batch_of(cfg: &RunConfig, pieces: &[Trajectory]) -> Result<TrainBatch, RlError> {
    TrainBatch::from_trajectories(pieces, cfg.rl.gamma, cfg.rl.gae_lambda, &RewardMap::first(cfg.rl.reward_scale))
}

/// A policy snapshot as actors hold it (weights rounded through the wire
/// format).
#[derive(Debug)]
pub(crate) struct Snapshot {
    pub version: Version,
    pub policy: MlpPolicy,
}

impl Snapshot {
    pub fn of(packet: &PolicyPacket, shape: &NetShape) -> Result<Arc<Self>, RlError> {
        Ok(Arc::new(Snapshot {
            version: packet.version,
            policy: MlpPolicy::from_params(shape, &packet.params)?,
        }))
    }
}

#[derive(Debug, Clone)]
enum Msg {
    Policy(Arc<Snapshot>),
    Samples(Arc<(Trajectory, Vec<f64>)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    ActorDone(usize),
    LearnerDone,
    Publish,
}

struct Timed(f64, u64, Event);

impl PartialEq for Timed {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Timed {}
impl PartialOrd for Timed {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Timed {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

struct ActorCtx {
    env: Actor,
    held: Arc<Snapshot>,
    /// Segment in flight: trajectory plus finished episode returns.
    running: Option<(Trajectory, Vec<f64>)>,
    /// Steps still owed this round (sync schedule).
    owed: usize,
}

struct SimRun<'a> {
    cfg: &'a RunConfig,
    shape: NetShape,
    net: SimNetwork<Msg>,
    topo: TreeTopology,
    actors: Vec<ActorCtx>,
    learner: Learner,
    buffer: SampleBuffer,
    events: BinaryHeap<Timed>,
    seq: u64,
    learner_busy: Option<UpdateOutcome>,
    consuming: usize,
    latest: Arc<Snapshot>,
    published: Version,
    policy_len: usize,
    reporter: Reporter,
    metrics: RunMetrics,
    share: usize,
    round_steps: usize,
}

impl<'a> SimRun<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, WorkflowError> {
        let tree = SeedTree::new(cfg.run.seed);
        let (learner, shape) = initial_learner(cfg, tree)?;
        let (root, nodes) = layout_endpoints(cfg.run.actors, cfg.transport.actors_per_machine);
        let mut all = vec![root];
        all.extend(&nodes);
        let net = SimNetwork::with_endpoints(cfg.transport.cost_model()?, &all)?;
        let topo = TreeTopology::build(cfg.broadcast.layout, &nodes, root)?;
        let packet = learner.packet();
        let latest = Snapshot::of(&packet, &shape)?;
        let share = sync_share(cfg.rl.batch_size, cfg.run.actors);
        let actors = build_actors(cfg, tree)?
            .into_iter()
            .map(|env| ActorCtx {
                env,
                held: latest.clone(),
                running: None,
                owed: share,
            })
            .collect();
        Ok(SimRun {
            cfg,
            shape,
            net,
            topo,
            actors,
            learner,
            buffer: SampleBuffer::default(),
            events: BinaryHeap::new(),
            seq: 0,
            learner_busy: None,
            consuming: 0,
            published: packet.version,
            policy_len: serialize_packet(&packet).len(),
            latest,
            reporter: Reporter::new(cfg.metrics.interval),
            metrics: RunMetrics::default(),
            share,
            round_steps: 0,
        })
    }

    fn sync(&self) -> bool {
        self.cfg.run.schedule == Schedule::Sync
    }

    fn at(&mut self, t: f64, e: Event) {
        self.events.push(Timed(t, self.seq, e));
        self.seq += 1;
    }

    fn start_segment(&mut self, i: usize, now: f64) -> Result<(), WorkflowError> {
        let len = if self.sync() {
            self.cfg.run.rollout_len.min(self.actors[i].owed)
        } else {
            self.cfg.run.rollout_len
        };
        if len == 0 {
            return Ok(());
        }
        let a = &mut self.actors[i];
        let held = a.held.clone();
        let t = a.env.rollout(&held.policy, held.version, len)?;
        let eps = a.env.take_finished().iter().map(|e| e.total_reward).collect();
        let dt = t.len() as f64 * self.cfg.run.frame_cost;
        a.running = Some((t, eps));
        self.at(now + dt, Event::ActorDone(i));
        Ok(())
    }

    fn samples_len(&self, t: &Trajectory) -> usize {
        if self.cfg.transport.per_byte_cost > 0.0 {
            lmrk_core::wire::encode_trajectory(t).len()
        } else {
            0
        }
    }

    fn actor_done(&mut self, i: usize, now: f64) -> Result<(), WorkflowError> {
        let (t, eps) = self.actors[i].running.take().expect("segment in flight");
        let len = self.samples_len(&t);
        let steps = t.len();
        let node = i as u32 + 1;
        self.net.send(node, LEARNER_NODE, Msg::Samples(Arc::new((t, eps))), len)?;
        if self.sync() {
            self.actors[i].owed -= steps.min(self.actors[i].owed);
            if self.actors[i].owed == 0 {
                return Ok(());
            }
        }
        self.start_segment(i, now)
    }

    fn policy_arrived(&mut self, node: u32, snap: Arc<Snapshot>, now: f64) -> Result<(), WorkflowError> {
        forward(&self.topo, &mut self.net, node, Msg::Policy(snap.clone()), self.policy_len)?;
        let i = node as usize - 1;
        let sync = self.sync();
        let a = &mut self.actors[i];
        if snap.version <= a.held.version {
            return Ok(());
        }
        a.held = snap;
        if sync && a.running.is_none() && a.owed == 0 {
            a.owed = self.share;
            self.start_segment(i, now)?;
        }
        Ok(())
    }

    fn samples_arrived(&mut self, s: &(Trajectory, Vec<f64>), now: f64) -> Result<(), WorkflowError> {
        for r in &s.1 {
            self.reporter.episode(*r);
        }
        self.round_steps += s.0.len();
        self.buffer.push(s.0.clone());
        self.try_update(now)
    }

    fn try_update(&mut self, now: f64) -> Result<(), WorkflowError> {
        if self.learner_busy.is_some() || self.metrics.aborted.is_some() {
            return Ok(());
        }
        let want = if self.sync() {
            // a round is complete when every actor delivered its share
            if self.round_steps < self.share * self.actors.len() {
                return Ok(());
            }
            self.round_steps = 0;
            self.buffer.len()
        } else {
            if self.buffer.len() < self.cfg.rl.batch_size {
                return Ok(());
            }
            self.cfg.rl.batch_size
        };
        let pieces = self.buffer.take(want);
        let batch = batch_of(self.cfg, &pieces)?;
        match self.learner.update(&batch) {
            Ok(out) => {
                let dt = self.cfg.run.learner_cost_per_sample * want as f64 * self.cfg.rl.batch_reuse as f64;
                self.learner_busy = Some(out);
                self.consuming = want;
                self.at(now + dt, Event::LearnerDone);
                Ok(())
            }
            Err(e @ RlError::NonFiniteLoss { .. }) => {
                self.metrics.aborted = Some(e.to_string());
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn learner_done(&mut self, now: f64) -> Result<bool, WorkflowError> {
        let out = self.learner_busy.take().expect("update in flight");
        self.metrics.total_frames += self.consuming as u64;
        self.metrics.gradient_steps += out.gradient_steps as u64;
        self.reporter
            .staleness(out.staleness.iter().map(|r| r.staleness), &mut self.metrics);
        if budget_spent(self.cfg, self.metrics.total_frames) {
            return Ok(true);
        }
        self.latest = Snapshot::of(&out.packet, &self.shape)?;
        self.publish(now)?;
        self.try_update(now)?;
        Ok(false)
    }

    /// Broadcast the newest snapshot unless the learner's previous sends are
    /// still going out, in which case only the newest waits for the link.
    fn publish(&mut self, now: f64) -> Result<(), WorkflowError> {
        if self.latest.version <= self.published {
            return Ok(());
        }
        let free = self.net.sender_free_at(LEARNER_NODE);
        if free > now {
            self.at(free, Event::Publish);
            return Ok(());
        }
        self.published = self.latest.version;
        start_broadcast(&self.topo, &mut self.net, Msg::Policy(self.latest.clone()), self.policy_len)?;
        Ok(())
    }

    fn run(mut self) -> Result<RlOutcome, WorkflowError> {
        for i in 0..self.actors.len() {
            self.start_segment(i, 0.0)?;
        }
        let mut now = 0.0;
        loop {
            if self.metrics.aborted.is_some() {
                break;
            }
            let t_net = self.net.next_delivery_time();
            let t_loc = self.events.peek().map(|e| e.0);
            let network_first = match (t_net, t_loc) {
                (None, None) => {
                    return Err(WorkflowError::Runtime("simulation stalled before the frame budget".into()))
                }
                (Some(a), Some(b)) => a <= b,
                (Some(_), None) => true,
                (None, Some(_)) => false,
            };
            if network_first {
                let d = self.net.pop_next().expect("peeked");
                now = d.time;
                self.reporter.advance(now, &mut self.metrics);
                match d.payload {
                    Msg::Policy(s) => self.policy_arrived(d.to, s, now)?,
                    Msg::Samples(s) => self.samples_arrived(&s, now)?,
                }
            } else {
                let Timed(t, _, e) = self.events.pop().expect("peeked");
                now = t;
                self.net.advance_to(now);
                self.reporter.advance(now, &mut self.metrics);
                match e {
                    Event::ActorDone(i) => self.actor_done(i, now)?,
                    Event::Publish => self.publish(now)?,
                    Event::LearnerDone => {
                        if self.learner_done(now)? {
                            break;
                        }
                    }
                }
            }
        }
        self.reporter.finish(now, &mut self.metrics);
        Ok(RlOutcome {
            packet: self.learner.packet(),
            metrics: self.metrics,
        })
    }
}
