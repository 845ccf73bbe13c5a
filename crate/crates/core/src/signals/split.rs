use crate::error::{Error, Result};
use crate::rng::Rng;

pub const TEST_FRACTION: f64 = 0.20;
/// Share of the training part held out for early stopping.
pub const VALIDATION_FRACTION: f64 = 0.10;

/// Disjoint index sets over one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndex {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndex {
    /// Per-class counts of `indices` for labels in `0..classes`.
    pub fn class_counts(labels: &[usize], indices: &[usize], classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for &i in indices {
            counts[labels[i]] += 1;
        }
        counts
    }

    /// Moves a stratified `fraction` of the training indices into the
    /// validation set.
    pub fn carve_validation(&mut self, labels: &[usize], fraction: f64, rng: &mut Rng) -> Result<()> {
        let sub: Vec<usize> = self.train.iter().map(|&i| labels[i]).collect();
        let inner = stratified_split(&sub, fraction, rng)?;
        let train = inner.train.iter().map(|&k| self.train[k]).collect();
        let mut validation: Vec<usize> = inner.test.iter().map(|&k| self.train[k]).collect();
        validation.extend(&self.validation);
        validation.sort_unstable();
        self.train = train;
        self.validation = validation;
        Ok(())
    }
}

/// Per-class quotas: floors of `count * fraction`, then the leftover units
/// by largest remainder (ties to the lower class) until the total is
/// `round(n * fraction)`.
fn quotas(counts: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let total = (n as f64 * fraction).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * fraction).collect();
    let mut q: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(q.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if left == 0 {
            break;
        }
        if q[c] < counts[c] {
            q[c] += 1;
            left -= 1;
        }
    }
    q
}

/// Stratified train/test split. Each class is shuffled independently and
/// its first `quota` indices go to the test set. Output indices are sorted.
pub fn stratified_split(labels: &[usize], test_fraction: f64, rng: &mut Rng) -> Result<SplitIndex> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset("nothing to split"));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidConfig(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let classes = labels.iter().max().unwrap() + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    if let Some((class, m)) = members.iter().enumerate().find(|(_, m)| m.len() == 1) {
        return Err(Error::ClassTooSmall { class, count: m.len() });
    }
    let counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let q = quotas(&counts, test_fraction);
    let mut split = SplitIndex {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for (idx, quota) in members.iter_mut().zip(q) {
        rng.shuffle(idx);
        split.test.extend_from_slice(&idx[..quota]);
        split.train.extend_from_slice(&idx[quota..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
