use super::TrainConfig;
use crate::error::{Error, Result};

/// Step at which the one-cycle schedule peaks.
pub fn peak_step(total_steps: usize, pct_start: f64) -> usize {
    let last = total_steps.saturating_sub(1).max(1);
    ((pct_start * total_steps as f64).round() as usize).clamp(1, last)
}

/// One-cycle learning rate: cosine warm-up from `max_lr / div_factor` to
/// `max_lr` at step `round(pct_start * total)`, then cosine annealing to
/// `max_lr / final_div_factor` at the last step.
pub fn one_cycle_lr(step: usize, total_steps: usize, config: &TrainConfig) -> Result<f64> {
    if step >= total_steps {
        return Err(Error::StepOutOfRange { step, total: total_steps });
    }
    let max = config.max_lr;
    let start = max / config.div_factor;
    let end = max / config.final_div_factor;
    if total_steps == 1 {
        return Ok(start);
    }
    let peak = peak_step(total_steps, config.pct_start);
    let cos_ramp = |from: f64, to: f64, frac: f64| to + (from - to) * (1.0 + (std::f64::consts::PI * frac).cos()) / 2.0;
    if step <= peak {
        Ok(cos_ramp(start, max, step as f64 / peak as f64))
    } else {
        let frac = (step - peak) as f64 / (total_steps - 1 - peak) as f64;
        Ok(cos_ramp(max, end, frac))
    }
}
