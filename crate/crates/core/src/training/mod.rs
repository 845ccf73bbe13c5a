//! Optimisation recipe: Adam under a one-cycle schedule, early stopping on
//! validation macro-F1, learning-rate search and repeated runs.

mod adam;
mod metrics;
mod schedule;
mod search;
mod trainer;

pub use adam::Adam;
pub use metrics::{mean_std, Metrics};
pub use schedule::{one_cycle_lr, peak_step};
pub use search::{
    draw_candidates, lr_search, prepare_split, run_repeated, select_best, training_set, RepeatedReport, RunResult,
    SearchReport, Trial,
};
pub use trainer::{
    evaluate, make_batch, train, EarlyStopping, EpochRecord, History, TrainOutcome, Verdict, EVAL_BATCH,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_lr: f64,
    pub lr_search_range: [f64; 2],
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub betas: [f64; 2],
    pub eps: f64,
    pub pct_start: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
    pub seed: u64,
    pub runs: usize,
    /// Add 30 augmented copies of every training sample.
    pub augment: bool,
    /// Epochs per learning-rate search trial.
    pub search_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_lr: 0.004,
            lr_search_range: [0.001, 0.008],
            epochs: 100,
            patience: 20,
            batch_size: 32,
            betas: [0.9, 0.999],
            eps: 1e-8,
            pct_start: 0.3,
            div_factor: 25.0,
            final_div_factor: 1e4,
            seed: 0,
            runs: 3,
            augment: true,
            search_epochs: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.max_lr > 0.0 && self.max_lr.is_finite()) {
            return bad(format!("max_lr must be positive, got {}", self.max_lr));
        }
        let [lo, hi] = self.lr_search_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("lr_search_range [{lo}, {hi}] is empty or non-positive"));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.patience >= self.epochs {
            return bad(format!("patience {} must be below epochs {}", self.patience, self.epochs));
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size {} is below 2 (batch norm needs two rows)", self.batch_size));
        }
        if !(self.pct_start > 0.0 && self.pct_start < 1.0) {
            return bad(format!("pct_start {} outside (0, 1)", self.pct_start));
        }
        if !(self.div_factor > 0.0 && self.final_div_factor > 0.0) {
            return bad("div factors must be positive".into());
        }
        if self.betas.iter().any(|b| !(0.0..1.0).contains(b)) || self.eps <= 0.0 {
            return bad(format!("adam betas {:?} / eps {} out of range", self.betas, self.eps));
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.search_epochs == 0 {
            return bad("search_epochs must be at least 1".into());
        }
        Ok(())
    }
}
