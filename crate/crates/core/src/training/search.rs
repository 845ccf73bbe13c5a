use serde::{Deserialize, Serialize};

use super::{evaluate, mean_std, train, History, Metrics, TrainConfig};
use crate::error::{Error, Result};
use crate::model::{HyperFuseNet, ModelConfig};
use crate::rng::Rng;
use crate::signals::{
    augment, labels, stratified_split, Sample, SplitIndex, Target, TrainingPartition, TEST_FRACTION,
    VALIDATION_FRACTION,
};

/// Stratified test split, then a stratified validation carve from the
/// training part, both drawn from `Rng::new(seed)`.
pub fn prepare_split(samples: &[Sample], target: Target, seed: u64) -> Result<SplitIndex> {
    let y = labels(samples, target);
    let mut rng = Rng::new(seed);
    let mut split = stratified_split(&y, TEST_FRACTION, &mut rng)?;
    split.carve_validation(&y, VALIDATION_FRACTION, &mut rng)?;
    Ok(split)
}

/// Training originals followed by their augmented copies when `augment`
/// is set.
pub fn training_set(samples: &[Sample], split: &SplitIndex, augment_data: bool, seed: u64) -> Result<Vec<Sample>> {
    let partition = TrainingPartition::from_split(samples, split)?;
    let mut out = partition.samples().to_vec();
    if augment_data {
        out.extend(augment(&partition, seed).into_iter().map(|a| a.sample));
    }
    Ok(out)
}

fn pick(samples: &[Sample], indices: &[usize]) -> Vec<Sample> {
    indices.iter().map(|&i| samples[i].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub max_lr: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub trials: Vec<Trial>,
    pub best: f64,
}

/// `count` learning rates drawn log-uniformly from `[lo, hi]`.
pub fn draw_candidates(range: [f64; 2], count: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let [lo, hi] = range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("search range [{lo}, {hi}] is empty")));
    }
    if count == 0 {
        return Err(Error::InvalidConfig("search needs at least one trial".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|_| (a + rng.uniform() * (b - a)).exp().clamp(lo, hi))
        .collect())
}

/// Index of the highest score; ties keep the earliest trial.
pub fn select_best(trials: &[Trial]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, t) in trials.iter().enumerate() {
        if best.is_none_or(|b| t.score > trials[b].score) {
            best = Some(i);
        }
    }
    best
}

/// Short runs of `config.search_epochs` epochs, one per candidate, each
/// scored by its best validation macro-F1. Candidates, the split, model
/// initialisation and augmentation all derive from `config.seed`.
pub fn lr_search(
    samples: &[Sample],
    target: Target,
    model_config: &ModelConfig,
    config: &TrainConfig,
    trials: usize,
) -> Result<SearchReport> {
    config.validate()?;
    model_config.validate()?;
    let candidates = draw_candidates(config.lr_search_range, trials, &mut Rng::new(config.seed))?;
    let split = prepare_split(samples, target, config.seed)?;
    let train_set = training_set(samples, &split, config.augment, config.seed)?;
    let val_set = pick(samples, &split.validation);
    let mut results = Vec::with_capacity(trials);
    for max_lr in candidates {
        let short = TrainConfig {
            max_lr,
            epochs: config.search_epochs,
            patience: config.search_epochs - 1,
            ..config.clone()
        };
        let model = HyperFuseNet::build(model_config, &mut Rng::new(config.seed))?;
        let outcome = train(&model, &train_set, &val_set, target, &short)?;
        results.push(Trial {
            max_lr,
            score: outcome.best_val_f1,
        });
    }
    let best = results[select_best(&results).expect("at least one trial")].max_lr;
    Ok(SearchReport { trials: results, best })
}

#[derive(Debug)]
pub struct RunResult {
    pub seed: u64,
    pub model: HyperFuseNet<f32>,
    pub history: History,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub test: Metrics,
}

#[derive(Debug)]
pub struct RepeatedReport {
    pub target: Target,
    pub split: SplitIndex,
    pub runs: Vec<RunResult>,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
}

impl RepeatedReport {
    pub fn from_runs(target: Target, split: SplitIndex, runs: Vec<RunResult>) -> Self {
        let f1: Vec<f64> = runs.iter().map(|r| r.test.f1_macro).collect();
        let acc: Vec<f64> = runs.iter().map(|r| r.test.accuracy).collect();
        let (f1_mean, f1_std) = mean_std(&f1);
        let (acc_mean, acc_std) = mean_std(&acc);
        Self {
            target,
            split,
            runs,
            f1_mean,
            f1_std,
            acc_mean,
            acc_std,
        }
    }
}

/// `config.runs` full trainings with seeds `seed + r`. The split stays
/// fixed by `config.seed`, so every run is scored on the same test set;
/// initialisation, augmentation, shuffling and dropout follow the run seed.
pub fn run_repeated(
    samples: &[Sample],
    target: Target,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<RepeatedReport> {
    config.validate()?;
    model_config.validate()?;
    let split = prepare_split(samples, target, config.seed)?;
    let val_set = pick(samples, &split.validation);
    let test_set = pick(samples, &split.test);
    let mut runs = Vec::with_capacity(config.runs);
    for r in 0..config.runs {
        let seed = config.seed.wrapping_add(r as u64);
        let run_config = TrainConfig { seed, ..config.clone() };
        let train_set = training_set(samples, &split, config.augment, seed)?;
        let model = HyperFuseNet::build(model_config, &mut Rng::new(seed))?;
        let outcome = train(&model, &train_set, &val_set, target, &run_config)?;
        let test = evaluate(&model, &test_set, target)?;
        runs.push(RunResult {
            seed,
            model,
            history: outcome.history,
            best_epoch: outcome.best_epoch,
            best_val_f1: outcome.best_val_f1,
            test,
        });
    }
    Ok(RepeatedReport::from_runs(target, split, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::StateDict;
    use crate::training::trainer::tests::{toy_config, toy_samples};

    #[test]
    fn candidates_in_range_and_seeded() {
        let a = draw_candidates([0.001, 0.008], 200, &mut Rng::new(4)).unwrap();
        let b = draw_candidates([0.001, 0.008], 200, &mut Rng::new(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| (0.001..=0.008).contains(&v)));
        // Log-uniform: about half fall below the geometric midpoint.
        let mid = (0.001f64 * 0.008).sqrt();
        let below = a.iter().filter(|&&v| v < mid).count();
        assert!((70..130).contains(&below), "{below}");
        assert!(draw_candidates([0.008, 0.001], 1, &mut Rng::new(0)).is_err());
        assert!(draw_candidates([0.001, 0.008], 0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn tie_goes_to_first() {
        let t = |max_lr, score| Trial { max_lr, score };
        assert_eq!(select_best(&[t(0.002, 50.0), t(0.003, 50.0), t(0.004, 50.0)]), Some(0));
        assert_eq!(select_best(&[t(0.002, 40.0), t(0.003, 50.0), t(0.004, 50.0)]), Some(1));
        assert_eq!(select_best(&[]), None);
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            patience: 2,
            batch_size: 16,
            search_epochs: 2,
            augment: false,
            runs: 2,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn single_trial_search() {
        let mc = toy_config();
        let data = toy_samples(&mc, 60, 2);
        let rep = lr_search(&data, Target::Arousal, &mc, &quick(), 1).unwrap();
        assert_eq!(rep.trials.len(), 1);
        assert_eq!(rep.best, rep.trials[0].max_lr);
        assert!((0.001..=0.008).contains(&rep.best));
    }

    #[test]
    fn repeated_runs_differ_and_share_split() {
        let mc = toy_config();
        let data = toy_samples(&mc, 60, 2);
        let rep = run_repeated(&data, Target::Valence, &mc, &quick()).unwrap();
        assert_eq!(rep.runs.len(), 2);
        assert_eq!(rep.runs[0].seed, 11);
        assert_eq!(rep.runs[1].seed, 12);
        assert_eq!(rep.split.test.len(), 12);
        let w0: Vec<Vec<f32>> = rep.runs[0].model.state().iter().map(|(_, t)| t.to_vec()).collect();
        let w1: Vec<Vec<f32>> = rep.runs[1].model.state().iter().map(|(_, t)| t.to_vec()).collect();
        assert_ne!(w0, w1);
        for r in &rep.runs {
            assert_eq!(r.test.total(), 12);
        }
    }

    #[test]
    fn report_statistics() {
        let mc = toy_config();
        let model = || HyperFuseNet::build(&mc, &mut Rng::new(0)).unwrap();
        let run = |acc: f64, f1: f64| RunResult {
            seed: 0,
            model: model(),
            history: History::default(),
            best_epoch: 1,
            best_val_f1: 0.0,
            test: Metrics {
                accuracy: acc,
                f1_macro: f1,
                ..Metrics::from_confusion(vec![vec![1]])
            },
        };
        let split = SplitIndex {
            train: vec![],
            validation: vec![],
            test: vec![],
        };
        let one = RepeatedReport::from_runs(Target::Arousal, split.clone(), vec![run(40.0, 30.0)]);
        assert_eq!((one.acc_mean, one.acc_std), (40.0, 0.0));
        let three = RepeatedReport::from_runs(Target::Arousal, split, vec![run(40.0, 1.0), run(41.0, 2.0), run(42.0, 3.0)]);
        assert_eq!(three.acc_mean, 41.0);
        assert!((three.acc_std - 1.0).abs() < 1e-15);
        assert_eq!(three.f1_mean, 2.0);
    }
}
