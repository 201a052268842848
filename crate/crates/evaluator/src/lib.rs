//! The evaluator bridge between evolutionary search and RL training.
//!
//! EC algorithms see only [`Evaluator`]: `describe`, `initialize` and
//! `evaluate`. Concrete evaluators are the ZDT1/DTLZ2 benchmarks, a PPO
//! training evaluator and its EMOGI multi-objective variant.

pub mod emogi;
pub mod error;
pub mod numeric;
pub mod rl;
pub mod spec;
pub mod trainer;

pub use emogi::{
    emogi_reward, emogi_step_reward, normalized_score, EmogiConfig, EmogiStream, EpochSummary, LazinessForm,
};
pub use error::EvalError;
pub use numeric::{dtlz2, zdt1, Dtlz2, Zdt1};
pub use rl::{RlEvaluatorConfig, RlTrainingEvaluator, FITNESS_WINDOW};
pub use spec::{CodingSpec, EvalStats, Evaluation, Evaluator, EvaluatorSpec, HyperRange};
pub use trainer::{make_actor, moved, shape_for_env, Trainer, TrainerSetup};
