//! The run configuration file: TOML with fixed sections, unknown keys rejected.

use std::path::{Path, PathBuf};

use lmrk_ec::{GaConfig, PbtConfig};
use lmrk_evaluator::{EmogiConfig, HyperRange};
use lmrk_mdp::EnvConfig;
use lmrk_net::{CostModel, Layout};
use lmrk_rl::PpoConfig;
use serde::{Deserialize, Serialize};

use crate::error::WorkflowError;

pub const SEED_ENV: &str = "LMRK_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ppo,
    PbtPpo,
    Nsga2,
    Es,
    Emogi,
    BenchBroadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Actors never wait; the learner broadcasts without blocking.
    Async,
    /// Actors wait for each new policy before sampling again.
    Sync,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Simulated,
    Socket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: Mode,
    pub seed: u64,
    /// Frame budget of a `ppo` run.
    pub frames: u64,
    /// Actor contexts.
    pub actors: usize,
    /// Steps per trajectory segment pushed by an actor.
    pub rollout_len: usize,
    pub schedule: Schedule,
    /// Simulated seconds per environment step.
    pub frame_cost: f64,
    /// Simulated seconds per sample and gradient pass of a learner update.
    pub learner_cost_per_sample: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            mode: Mode::Ppo,
            seed: 0,
            frames: 500_000,
            actors: 8,
            rollout_len: 256,
            schedule: Schedule::Async,
            frame_cost: 1e-3,
            learner_cost_per_sample: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSection {
    pub kind: TransportKind,
    pub inter_machine_send_cost: f64,
    pub intra_machine_send_cost: f64,
    pub per_byte_cost: f64,
    /// Actor contexts sharing one simulated machine; the learner has its own.
    pub actors_per_machine: usize,
}

impl Default for TransportSection {
    fn default() -> Self {
        TransportSection {
            kind: TransportKind::Simulated,
            inter_machine_send_cost: 0.01,
            intra_machine_send_cost: 5e-4,
            per_byte_cost: 0.0,
            actors_per_machine: 8,
        }
    }
}

impl TransportSection {
    pub fn cost_model(&self) -> Result<CostModel, WorkflowError> {
        CostModel::new(self.inter_machine_send_cost, self.intra_machine_send_cost, self.per_byte_cost)
            .map_err(|e| WorkflowError::config("transport", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BroadcastSection {
    pub layout: Layout,
    /// Node counts swept by `bench_broadcast`.
    pub sizes: Vec<usize>,
    pub layouts: Vec<Layout>,
}

impl Default for BroadcastSection {
    fn default() -> Self {
        BroadcastSection {
            layout: Layout::Tree,
            sizes: vec![9, 25, 100, 400],
            layouts: vec![Layout::Flat, Layout::Tree],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EcSection {
    pub population: usize,
    pub generations: usize,
    /// Independent evaluation contexts.
    pub contexts: usize,
    /// Simulated latency range of one numerical evaluation.
    pub eval_latency: [f64; 2],
    pub ga: GaConfig,
    pub pbt: PbtConfig,
}

impl Default for EcSection {
    fn default() -> Self {
        EcSection {
            population: 100,
            generations: 250,
            contexts: 4,
            eval_latency: [0.5, 1.5],
            ga: GaConfig::default(),
            pbt: PbtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluatorSection {
    /// `zdt1`, `dtlz2` or `rl`.
    pub name: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// PPO frames per RL evaluation.
    pub budget_frames: u64,
    pub hyper: Vec<HyperRange>,
    pub emogi: Option<EmogiConfig>,
}

impl Default for EvaluatorSection {
    fn default() -> Self {
        EvaluatorSection {
            name: "zdt1".into(),
            n: None,
            m: None,
            budget_frames: 65_536,
            hyper: vec![HyperRange::new("lr", 1e-4, 0.1, true)],
            emogi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Directory receiving `metrics.csv` and `population.json`.
    pub output: PathBuf,
    /// Reporting interval in (simulated) seconds.
    pub interval: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            output: PathBuf::from("runs/latest"),
            interval: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub env: EnvConfig,
    pub transport: TransportSection,
    pub broadcast: BroadcastSection,
    pub rl: PpoConfig,
    pub ec: EcSection,
    pub evaluator: EvaluatorSection,
    pub metrics: MetricsSection,
}

impl RunConfig {
    /// Parse and validate; does not consult the environment.
    pub fn parse(text: &str) -> Result<Self, WorkflowError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| WorkflowError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a file and apply the `LMRK_SEED` override.
    pub fn load(path: &Path) -> Result<Self, WorkflowError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WorkflowError::Parse(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::parse(&text)?;
        if let Ok(s) = std::env::var(SEED_ENV) {
            cfg.run.seed = s
                .trim()
                .parse()
                .map_err(|_| WorkflowError::config(SEED_ENV, format!("not an unsigned integer: {s:?}")))?;
        }
        Ok(cfg)
    }

    /// The effective configuration, every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), WorkflowError> {
        let bad = |key: &str, msg: &str| Err(WorkflowError::config(key, msg));
        self.rl.validate().map_err(|e| WorkflowError::config("rl", e))?;
        self.transport.cost_model()?;
        if self.transport.actors_per_machine == 0 {
            return bad("transport.actors_per_machine", "must be at least 1");
        }
        if self.run.actors == 0 {
            return bad("run.actors", "must be at least 1");
        }
        if self.run.rollout_len == 0 {
            return bad("run.rollout_len", "must be at least 1");
        }
        if !(self.run.frame_cost > 0.0 && self.run.frame_cost.is_finite()) {
            return bad("run.frame_cost", "must be positive");
        }
        if !(self.run.learner_cost_per_sample >= 0.0 && self.run.learner_cost_per_sample.is_finite()) {
            return bad("run.learner_cost_per_sample", "must be non-negative");
        }
        if !(self.metrics.interval > 0.0 && self.metrics.interval.is_finite()) {
            return bad("metrics.interval", "must be positive");
        }
        let [lo, hi] = self.ec.eval_latency;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return bad("ec.eval_latency", "must be an interval [lo, hi] with 0 <= lo <= hi");
        }
        match self.run.mode {
            Mode::Ppo => {
                if crate::rl_loop::budget_spent(self, 0) {
                    return bad("run.frames", "must cover at least one batch");
                }
            }
            Mode::BenchBroadcast => {
                if self.broadcast.sizes.contains(&0) {
                    return bad("broadcast.sizes", "node counts must be at least 1");
                }
            }
            Mode::Nsga2 | Mode::Es | Mode::Emogi | Mode::PbtPpo => {
                if self.ec.population < 2 {
                    return bad("ec.population", "must be at least 2");
                }
                if self.run.mode != Mode::PbtPpo && self.ec.population % 2 != 0 {
                    return bad("ec.population", "must be even");
                }
                if self.ec.contexts == 0 {
                    return bad("ec.contexts", "must be at least 1");
                }
                let rl_eval = matches!(self.run.mode, Mode::Emogi | Mode::PbtPpo);
                match self.evaluator.name.as_str() {
                    "rl" => {}
                    "zdt1" | "dtlz2" if !rl_eval => {}
                    other => {
                        return bad(
                            "evaluator.name",
                            &format!("{other:?} cannot drive mode {:?}", self.run.mode),
                        )
                    }
                }
                if self.evaluator.name == "rl" && self.evaluator.budget_frames < self.rl.batch_size as u64 {
                    return bad("evaluator.budget_frames", "must cover at least one batch");
                }
                if self.run.mode == Mode::Emogi && self.env.name != "ponglite" {
                    return bad("env.name", "emogi runs on ponglite");
                }
                if self.run.mode == Mode::Es && self.evaluator.name == "rl" && !self.evaluator.hyper.is_empty() {
                    return bad("evaluator.hyper", "es mutates real vectors or weights; leave hyper empty");
                }
            }
        }
        if let Some(e) = &self.evaluator.emogi {
            e.validate().map_err(|e| WorkflowError::config("evaluator.emogi", e))?;
        }
        for h in &self.evaluator.hyper {
            h.validate().map_err(|e| WorkflowError::config("evaluator.hyper", e))?;
        }
        Ok(())
    }
}
