//! Orchestration of learner/actor RL runs and evolutionary generation loops.
//!
//! [`run_rl`] drives PPO with policy broadcast and trajectory gathering over
//! the simulated or socket transport. [`run_evolution`] runs NSGA-II, ES,
//! EMOGI or PBT generations: mating, evaluation in independent contexts,
//! the [`Collector`] barrier and synchronized selection.

pub mod bench;
pub mod collector;
pub mod config;
pub mod error;
pub mod evolution;
pub mod metrics;
pub mod rl_loop;
mod socket_loop;

use std::path::Path;

pub use bench::{bench_broadcast, bench_csv, BenchRow, BENCH_HEADER};
pub use collector::Collector;
pub use config::{Mode, RunConfig, Schedule, TransportKind, SEED_ENV};
pub use error::WorkflowError;
pub use evolution::{build_evaluator, pbt_step, run_evolution, EvolutionOutcome};
pub use metrics::{MetricsRow, ObjectiveStats, Reporter, RunMetrics, METRICS_HEADER};
pub use rl_loop::{layout_endpoints, run_rl, sync_share, RlOutcome};

/// What a configured run produced.
#[derive(Debug)]
pub enum RunOutput {
    Rl(RlOutcome),
    Evolution(EvolutionOutcome),
    Bench(Vec<BenchRow>),
}

impl RunOutput {
    pub fn metrics(&self) -> Option<&RunMetrics> {
        match self {
            RunOutput::Rl(o) => Some(&o.metrics),
            RunOutput::Evolution(o) => Some(&o.metrics),
            RunOutput::Bench(_) => None,
        }
    }

    /// Reason the run stopped early, if it did.
    pub fn aborted(&self) -> Option<&str> {
        self.metrics().and_then(|m| m.aborted.as_deref())
    }
}

/// Dispatch on `[run] mode`.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput, WorkflowError> {
    match cfg.run.mode {
        Mode::Ppo => Ok(RunOutput::Rl(run_rl(cfg)?)),
        Mode::BenchBroadcast => Ok(RunOutput::Bench(bench_broadcast(
            &cfg.broadcast.sizes,
            &cfg.broadcast.layouts,
            cfg.transport.cost_model()?,
        )?)),
        _ => Ok(RunOutput::Evolution(run_evolution(cfg)?)),
    }
}

/// Write `metrics.csv` (and `population.json` or `broadcast.csv`) into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), WorkflowError> {
    std::fs::create_dir_all(dir)?;
    match out {
        RunOutput::Rl(o) => o.metrics.write_csv(&dir.join("metrics.csv"))?,
        RunOutput::Evolution(o) => {
            o.metrics.write_csv(&dir.join("metrics.csv"))?;
            let json = serde_json::to_string_pretty(&o.snapshot()).expect("snapshot serializes");
            std::fs::write(dir.join("population.json"), json + "\n")?;
        }
        RunOutput::Bench(rows) => std::fs::write(dir.join("broadcast.csv"), bench_csv(rows))?,
    }
    Ok(())
}
