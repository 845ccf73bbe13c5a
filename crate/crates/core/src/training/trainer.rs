use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{one_cycle_lr, Adam, Metrics, TrainConfig};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::layers::{cross_entropy, Phase, StateDict};
use crate::model::{argmax_rows, Batch, HyperFuseNet, Modality, PerModality};
use crate::rng::Rng;
use crate::signals::{Sample, Target};

/// Rows per forward pass when scoring.
pub const EVAL_BATCH: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(["epoch", "train_loss", "val_loss", "val_f1", "lr"]).map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.val_loss.to_string(),
                r.val_f1.to_string(),
                r.lr.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Waiting,
    Stop,
}

/// Patience counter on a metric to maximise. Only a strict improvement
/// resets it.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, metric: f64) -> Verdict {
        let improved = match self.best {
            None => !metric.is_nan(),
            Some((_, best)) => metric > best,
        };
        if improved {
            self.best = Some((epoch, metric));
            self.stale = 0;
            return Verdict::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            Verdict::Stop
        } else {
            Verdict::Waiting
        }
    }

    /// Epoch and value of the best observation so far.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: History,
    /// 1-based epoch whose parameters the model now holds.
    pub best_epoch: usize,
    pub best_val_f1: f64,
}

/// Stacks samples into one batch of `[rows, len]` tensors.
pub fn make_batch(samples: &[&Sample]) -> Result<Batch<f32>> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("cannot batch zero samples"));
    }
    let inputs = PerModality::try_from_fn(|m: Modality| {
        let len = samples[0].signals[m].len();
        let mut data = Vec::with_capacity(samples.len() * len);
        for s in samples {
            if s.signals[m].len() != len {
                return Err(Error::LengthMismatch(format!(
                    "sample {}: {m} has {} values, batch has {len}",
                    s.id,
                    s.signals[m].len()
                )));
            }
            data.extend_from_slice(&s.signals[m]);
        }
        Tensor::new(&[samples.len(), len], data)
    })?;
    Ok(Batch::new(inputs))
}

/// Mean loss and predictions in evaluation mode.
fn score(model: &HyperFuseNet<f32>, samples: &[Sample], target: Target) -> Result<(f64, Vec<usize>)> {
    let classes = model.config().classes;
    let mut loss_sum = 0.0;
    let mut preds = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_BATCH) {
        let refs: Vec<&Sample> = chunk.iter().collect();
        let logits = model.forward(&make_batch(&refs)?, &mut Phase::Eval)?;
        let targets: Vec<usize> = chunk.iter().map(|s| s.label(target)).collect();
        loss_sum += cross_entropy(&logits, &targets)?.item() as f64 * chunk.len() as f64;
        preds.extend(argmax_rows(&logits.to_vec(), classes));
    }
    Ok((loss_sum / samples.len() as f64, preds))
}

pub fn evaluate(model: &HyperFuseNet<f32>, samples: &[Sample], target: Target) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("evaluation set is empty"));
    }
    let (_, preds) = score(model, samples, target)?;
    let targets: Vec<usize> = samples.iter().map(|s| s.label(target)).collect();
    Metrics::from_predictions(&targets, &preds, model.config().classes)
}

/// Mini-batches per epoch. A trailing batch of one row is dropped because
/// batch norm cannot train on it.
fn batches_per_epoch(n: usize, batch: usize) -> usize {
    n / batch + usize::from(n % batch >= 2)
}

/// Trains in place and leaves the model holding the parameters and running
/// statistics of the epoch with the best validation macro-F1. Shuffling and
/// dropout draw from `Rng::new(config.seed)`.
pub fn train(
    model: &HyperFuseNet<f32>,
    train_set: &[Sample],
    val_set: &[Sample],
    target: Target,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.len() < 2 {
        return Err(Error::EmptyDataset("training set needs at least 2 samples"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptyDataset("validation set is empty"));
    }
    let classes = model.config().classes;
    let val_targets: Vec<usize> = val_set.iter().map(|s| s.label(target)).collect();
    let params: Vec<Tensor<f32>> = model.parameters().into_iter().map(|(_, t)| t).collect();
    let state: Vec<Tensor<f32>> = model.state().into_iter().map(|(_, t)| t).collect();
    let mut adam = Adam::new(&params, (config.betas[0], config.betas[1]), config.eps);
    let mut rng = Rng::new(config.seed);
    let steps_per_epoch = batches_per_epoch(train_set.len(), config.batch_size);
    let total_steps = steps_per_epoch * config.epochs;

    let mut stopper = EarlyStopping::new(config.patience);
    let mut snapshot: Vec<Vec<f32>> = Vec::new();
    let mut history = History::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step = 0;
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        let mut lr = 0.0;
        for chunk in order.chunks(config.batch_size).take(steps_per_epoch) {
            let rows: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let targets: Vec<usize> = rows.iter().map(|s| s.label(target)).collect();
            let batch = make_batch(&rows)?;
            for p in &params {
                p.zero_grad();
            }
            let logits = model.forward(&batch, &mut Phase::Train(&mut rng))?;
            let loss = cross_entropy(&logits, &targets)?;
            loss_sum += loss.item() as f64 * rows.len() as f64;
            seen += rows.len();
            loss.backward()?;
            lr = one_cycle_lr(step, total_steps, config)?;
            adam.step(&params, lr)?;
            step += 1;
        }
        let (val_loss, preds) = score(model, val_set, target)?;
        let val_f1 = Metrics::from_predictions(&val_targets, &preds, classes)?.f1_macro;
        history.records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / seen as f64,
            val_loss,
            val_f1,
            lr,
        });
        match stopper.observe(epoch, val_f1) {
            Verdict::Improved => snapshot = state.iter().map(Tensor::to_vec).collect(),
            Verdict::Waiting => {}
            Verdict::Stop => break,
        }
    }
    let (best_epoch, best_val_f1) = stopper.best().unwrap_or((history.len(), f64::NAN));
    if !snapshot.is_empty() {
        for (t, values) in state.iter().zip(snapshot) {
            t.set_data(values)?;
        }
    }
    Ok(TrainOutcome {
        history,
        best_epoch,
        best_val_f1,
    })
}
