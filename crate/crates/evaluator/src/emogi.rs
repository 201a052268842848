//! Activeness/laziness objectives over fixed-length epochs of actions.

use lmrk_core::ObjectiveVector;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LazinessForm {
    /// Laziness is `w2·(1 − move(a))` per action, as literally written:
    /// an epoch collects up to `w2·T`.
    Literal,
    /// `w2/T` per non-moving action, so both objectives live on `[0, w]`.
    #[default]
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmogiConfig {
    pub w1: f64,
    pub w2: f64,
    /// Epoch length in actions.
    #[serde(rename = "T")]
    pub epoch_len: usize,
    pub laziness_form: LazinessForm,
}

impl Default for EmogiConfig {
    fn default() -> Self {
        EmogiConfig {
            w1: 1.0,
            w2: 1.0,
            epoch_len: 100,
            laziness_form: LazinessForm::Normalized,
        }
    }
}

impl EmogiConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.epoch_len == 0 {
            return Err(EvalError::Config("emogi T must be at least 1".into()));
        }
        if !(self.w1 >= 0.0 && self.w2 >= 0.0 && self.w1.is_finite() && self.w2.is_finite()) {
            return Err(EvalError::Config("emogi weights must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub won: bool,
    pub moves: usize,
    pub actions: usize,
}

impl EpochSummary {
    pub fn move_fraction(&self) -> f64 {
        self.moves as f64 / self.actions as f64
    }
}

/// Epoch-level objectives `(f1, f2)`, both maximized.
pub fn emogi_reward(epoch: &EpochSummary, cfg: &EmogiConfig) -> ObjectiveVector {
    assert!(epoch.moves <= epoch.actions && epoch.actions > 0, "need 0 <= M <= T, T >= 1");
    let win = if epoch.won { 1.0 } else { 0.0 };
    let t = epoch.actions as f64;
    let frac = epoch.moves as f64 / t;
    let lazy = match cfg.laziness_form {
        LazinessForm::Normalized => cfg.w2 * (1.0 - frac),
        LazinessForm::Literal => cfg.w2 * (t - frac),
    };
    ObjectiveVector::maximize(vec![win + cfg.w1 * frac, win + lazy]).expect("finite weights")
}

/// Per-step share of the epoch objectives. `last` marks the step that closes
/// the epoch, which carries the win credit.
pub fn emogi_step_reward(moved: bool, last: bool, won: bool, actions: usize, cfg: &EmogiConfig) -> [f64; 2] {
    let t = actions as f64;
    let active = if moved { cfg.w1 / t } else { 0.0 };
    let lazy = match (cfg.laziness_form, moved) {
        (LazinessForm::Normalized, true) => 0.0,
        (LazinessForm::Normalized, false) => cfg.w2 / t,
        (LazinessForm::Literal, true) => cfg.w2 * (1.0 - 1.0 / t),
        (LazinessForm::Literal, false) => cfg.w2,
    };
    let win = if last && won { 1.0 } else { 0.0 };
    [active + win, lazy + win]
}

/// Streams one agent's actions into epochs of `T` actions. An epoch is won
/// when the agent scored more points than it conceded during it.
#[derive(Debug, Clone)]
pub struct EmogiStream {
    cfg: EmogiConfig,
    actions: usize,
    moves: usize,
    points_for: u32,
    points_against: u32,
}

impl EmogiStream {
    pub fn new(cfg: EmogiConfig) -> Self {
        EmogiStream {
            cfg,
            actions: 0,
            moves: 0,
            points_for: 0,
            points_against: 0,
        }
    }

    /// Feed one action and the game reward it led to. Returns the step's
    /// objective rewards and, when this action closes an epoch, its summary.
    pub fn push(&mut self, moved: bool, game_reward: f64) -> ([f64; 2], Option<EpochSummary>) {
        self.actions += 1;
        self.moves += moved as usize;
        if game_reward > 0.0 {
            self.points_for += 1;
        } else if game_reward < 0.0 {
            self.points_against += 1;
        }
        let t = self.cfg.epoch_len;
        if self.actions < t {
            return (emogi_step_reward(moved, false, false, t, &self.cfg), None);
        }
        let epoch = EpochSummary {
            won: self.points_for > self.points_against,
            moves: self.moves,
            actions: t,
        };
        *self = EmogiStream::new(self.cfg);
        (emogi_step_reward(moved, true, epoch.won, t, &self.cfg), Some(epoch))
    }
}

/// `(self − enemy + max) / (2·max)`.
pub fn normalized_score(score_self: f64, score_enemy: f64, score_max: f64) -> Result<f64, EvalError> {
    if !(score_max > 0.0) || (score_self - score_enemy).abs() > score_max {
        return Err(EvalError::Domain(format!(
            "normalized_score({score_self}, {score_enemy}, {score_max}) needs |self - enemy| <= max and max > 0"
        )));
    }
    Ok((score_self - score_enemy + score_max) / (2.0 * score_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_examples() {
        let cfg = EmogiConfig::default();
        let r = emogi_reward(&EpochSummary { won: true, moves: 30, actions: 100 }, &cfg);
        assert!((r.values()[0] - 1.3).abs() < 1e-12 && (r.values()[1] - 1.7).abs() < 1e-12);
        let r = emogi_reward(&EpochSummary { won: false, moves: 0, actions: 100 }, &cfg);
        assert_eq!(r.values(), &[0.0, 1.0]);
        let r = emogi_reward(&EpochSummary { won: true, moves: 100, actions: 100 }, &cfg);
        assert_eq!(r.values(), &[2.0, 1.0]);
    }

    #[test]
    fn score_examples() {
        assert_eq!(normalized_score(21.0, 0.0, 21.0).unwrap(), 1.0);
        assert_eq!(normalized_score(0.0, 21.0, 21.0).unwrap(), 0.0);
        assert_eq!(normalized_score(10.0, 10.0, 21.0).unwrap(), 0.5);
        assert!(normalized_score(22.0, 0.0, 21.0).is_err());
        assert!(normalized_score(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn stream_closes_epochs() {
        let cfg = EmogiConfig { epoch_len: 3, ..EmogiConfig::default() };
        let mut s = EmogiStream::new(cfg);
        assert!(s.push(true, 1.0).1.is_none());
        assert!(s.push(false, 0.0).1.is_none());
        let (r, e) = s.push(false, -1.0);
        assert_eq!(e, Some(EpochSummary { won: false, moves: 1, actions: 3 }));
        assert_eq!(r, [0.0, 1.0 / 3.0]);
        s.push(false, 1.0);
        s.push(false, 0.0);
        let (r, e) = s.push(false, 0.0);
        assert!(e.unwrap().won);
        assert_eq!(r, [1.0, 1.0 + 1.0 / 3.0]);
    }
}
