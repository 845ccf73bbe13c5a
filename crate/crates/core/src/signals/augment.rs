use super::{Sample, SplitIndex, EYE_SENTINEL};
use crate::error::{Error, Result};
use crate::model::PerModality;
use crate::rng::Rng;

pub const AUGMENT_ROUNDS: usize = 10;
pub const NOISE_SNR_DB: f64 = 5.0;
const LOW_SCALE: (f64, f64) = (0.7, 0.8);
const HIGH_SCALE: (f64, f64) = (1.2, 1.3);

/// Training samples only. The sole constructor takes the train indices of
/// a split, so test samples cannot reach [`augment`].
#[derive(Debug, Clone)]
pub struct TrainingPartition {
    samples: Vec<Sample>,
    indices: Vec<usize>,
}

impl TrainingPartition {
    pub fn from_split(samples: &[Sample], split: &SplitIndex) -> Result<Self> {
        if let Some(&bad) = split.train.iter().find(|&&i| i >= samples.len()) {
            return Err(Error::LengthMismatch(format!(
                "train index {bad} outside dataset of {} samples",
                samples.len()
            )));
        }
        Ok(Self {
            samples: split.train.iter().map(|&i| samples[i].clone()).collect(),
            indices: split.train.clone(),
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Dataset index of each training sample.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One augmented copy with the amplitude factor it received (1 for the
/// noisy original).
#[derive(Debug, Clone)]
pub struct Augmented {
    pub source: usize,
    pub scale: f64,
    pub sample: Sample,
}

/// Noise standard deviation giving `snr_db` against mean-square power `p`.
pub fn noise_sigma(power: f64, snr_db: f64) -> f64 {
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}

fn is_sentinel(v: f32) -> bool {
    v as f64 == EYE_SENTINEL
}

fn noisy_copy(src: &Sample, scale: f64, rng: &mut Rng, tag: String) -> Sample {
    let signals = PerModality::from_fn(|m| {
        let x = &src.signals[m];
        let eye = m == crate::model::Modality::Eye;
        let keep = |v: f32| !(eye && is_sentinel(v));
        let scaled: Vec<f64> = x.iter().map(|&v| if keep(v) { v as f64 * scale } else { v as f64 }).collect();
        let (sum, count) = scaled
            .iter()
            .zip(x)
            .filter(|(_, &v)| keep(v))
            .fold((0.0, 0usize), |(s, c), (y, _)| (s + y * y, c + 1));
        let sigma = if count == 0 { 0.0 } else { noise_sigma(sum / count as f64, NOISE_SNR_DB) };
        scaled
            .iter()
            .zip(x)
            .map(|(&y, &v)| if keep(v) { (y + sigma * rng.normal()) as f32 } else { v })
            .collect()
    });
    Sample {
        id: tag,
        signals,
        arousal: src.arousal,
        valence: src.valence,
    }
}

/// Ten rounds per training sample. Each round draws a factor from
/// [0.7, 0.8] and one from [1.2, 1.3], then adds 5 dB Gaussian noise to the
/// original and both scaled copies: 30 outputs per sample. Each sample's
/// stream is seeded with `seed ^ dataset_index`. Eye blinks (`-1`) are left
/// untouched. Originals are not included.
pub fn augment(partition: &TrainingPartition, seed: u64) -> Vec<Augmented> {
    let mut out = Vec::with_capacity(partition.len() * 3 * AUGMENT_ROUNDS);
    for (k, (sample, &index)) in partition.samples.iter().zip(&partition.indices).enumerate() {
        let mut rng = Rng::new(seed ^ index as u64);
        for round in 0..AUGMENT_ROUNDS {
            let low = rng.uniform_range(LOW_SCALE.0, LOW_SCALE.1);
            let high = rng.uniform_range(HIGH_SCALE.0, HIGH_SCALE.1);
            for (j, scale) in [1.0, low, high].into_iter().enumerate() {
                let tag = format!("{}_aug{round}_{j}", sample.id);
                out.push(Augmented {
                    source: k,
                    scale,
                    sample: noisy_copy(sample, scale, &mut rng, tag),
                });
            }
        }
    }
    out
}
