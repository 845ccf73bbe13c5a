use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification scores. `accuracy` and `f1_macro` are percentages;
/// per-class values are fractions. Confusion rows are true classes,
/// columns predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub confusion: Vec<Vec<usize>>,
}

impl Metrics {
    pub fn from_predictions(targets: &[usize], predictions: &[usize], classes: usize) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyDataset("no predictions to score"));
        }
        if targets.len() != predictions.len() {
            return Err(Error::LengthMismatch(format!(
                "{} targets vs {} predictions",
                targets.len(),
                predictions.len()
            )));
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&t, &p) in targets.iter().zip(predictions) {
            let bad = t.max(p);
            if bad >= classes {
                return Err(Error::TargetOutOfRange { target: bad, classes });
            }
            confusion[t][p] += 1;
        }
        Ok(Self::from_confusion(confusion))
    }

    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Self {
        let classes = confusion.len();
        let total: usize = confusion.iter().flatten().sum();
        let trace: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let mut precision = Vec::with_capacity(classes);
        let mut recall = Vec::with_capacity(classes);
        let mut f1 = Vec::with_capacity(classes);
        for c in 0..classes {
            let tp = confusion[c][c];
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let actual: usize = confusion[c].iter().sum();
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            precision.push(p);
            recall.push(r);
            f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        }
        Self {
            accuracy: ratio(trace, total) * 100.0,
            f1_macro: f1.iter().sum::<f64>() / classes.max(1) as f64 * 100.0,
            precision,
            recall,
            f1,
            confusion,
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
