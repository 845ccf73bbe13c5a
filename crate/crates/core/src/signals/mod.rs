//! Signal conditioning for the four modalities, segmentation into
//! fixed-length samples, stratified splitting, augmentation, synthetic
//! trials and the on-disk dataset layout.

mod augment;
pub mod filter;
pub mod io;
mod preprocess;
mod split;
mod synth;

pub use augment::{augment, noise_sigma, Augmented, TrainingPartition, AUGMENT_ROUNDS, NOISE_SNR_DB};
pub use filter::{bandpass, lowpass, notch, resample};
pub use preprocess::{
    average_eyes, average_reference, baseline_correct_gsr, baseline_window, map_rating, preprocess_trial,
    segment_trial, select_channels,
};
pub use split::{stratified_split, SplitIndex, TEST_FRACTION, VALIDATION_FRACTION};
pub use synth::{synthesize_dataset, SynthConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Modality, PerModality};

pub const RAW_FS: f64 = 256.0;
pub const PHYSIO_FS: f64 = 128.0;
pub const EYE_FS: f64 = 60.0;
pub const SEGMENTS: usize = 3;
pub const SEGMENT_SECONDS: f64 = 10.0;
pub const PHYSIO_WINDOW: usize = 1280;
pub const EYE_WINDOW: usize = 600;
pub const CLASSES: usize = 3;
/// Blink marker in eye-tracking data; kept as-is throughout.
pub const EYE_SENTINEL: f64 = -1.0;

/// 32-electrode montage of the raw recordings.
pub const RAW_EEG_CHANNELS: [&str; 32] = [
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7", "CP5", "CP1", "P3", "P7", "PO3", "O1", "Oz", "Pz", "Fp2", "AF4",
    "Fz", "F4", "F8", "FC6", "FC2", "Cz", "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
];
/// Electrodes kept after preprocessing, in output order.
pub const EEG_CHANNELS: [&str; 10] = ["F3", "F4", "F7", "F8", "FC5", "FC6", "T7", "T8", "P7", "P8"];
pub const ECG_CHANNELS: [&str; 3] = ["ECG1", "ECG2", "ECG3"];
pub const GSR_CHANNELS: [&str; 1] = ["GSR"];
/// Eye fields after averaging both eyes.
pub const EYE_FIELDS: [&str; 4] = ["pupil", "gaze_x", "gaze_y", "distance"];

/// Raw eye column for one field of one eye, e.g. `pupil_left`.
pub fn eye_column(field: &str, left: bool) -> String {
    format!("{field}_{}", if left { "left" } else { "right" })
}

/// Rows of the processed sample per modality.
pub fn channel_count(m: Modality) -> usize {
    match m {
        Modality::Eeg => EEG_CHANNELS.len(),
        Modality::Ecg => ECG_CHANNELS.len(),
        Modality::Gsr => GSR_CHANNELS.len(),
        Modality::Eye => EYE_FIELDS.len(),
    }
}

pub fn window_len(m: Modality) -> usize {
    match m {
        Modality::Eye => EYE_WINDOW,
        _ => PHYSIO_WINDOW,
    }
}

/// Flattened processed length per modality (channels x window).
pub fn sample_lens() -> PerModality<usize> {
    PerModality::from_fn(|m| channel_count(m) * window_len(m))
}

/// Named channels sampled at a common rate; one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    names: Vec<String>,
    fs: f64,
    rows: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(names: Vec<String>, fs: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != rows.len() {
            return Err(Error::LengthMismatch(format!("{} channel names for {} rows", names.len(), rows.len())));
        }
        if let Some(first) = rows.first() {
            if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != first.len()) {
                return Err(Error::LengthMismatch(format!(
                    "channel {} has {} samples, expected {}",
                    names[i],
                    r.len(),
                    first.len()
                )));
            }
        }
        if !(fs > 0.0) {
            return Err(Error::InvalidBand(format!("sampling rate {fs} must be positive")));
        }
        Ok(Self { names, fs, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    pub fn channels(&self) -> usize {
        self.rows.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.fs
    }

    pub fn row(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.rows[i].as_slice())
    }

    /// Same names and rate, new rows.
    pub(crate) fn with_rows(&self, fs: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.names.clone(), fs, rows)
    }
}

/// One raw trial: EEG, ECG and GSR at their acquisition rate, eye data for
/// both eyes, pre-stimulus GSR, and 1-9 self-assessment ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub id: String,
    pub eeg: Recording,
    pub ecg: Recording,
    pub gsr: Recording,
    pub gsr_pre: Recording,
    pub eye: Recording,
    pub arousal: i64,
    pub valence: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Arousal,
    Valence,
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arousal" => Ok(Target::Arousal),
            "valence" => Ok(Target::Valence),
            other => Err(Error::InvalidConfig(format!("target must be arousal or valence, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::Arousal => "arousal",
            Target::Valence => "valence",
        })
    }
}

/// One 10 s segment ready for the network: channel-major flattened
/// signals per modality and both class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub signals: PerModality<Vec<f32>>,
    pub arousal: usize,
    pub valence: usize,
}

impl Sample {
    pub fn label(&self, target: Target) -> usize {
        match target {
            Target::Arousal => self.arousal,
            Target::Valence => self.valence,
        }
    }

    /// Checks every modality has the processed length.
    pub fn validate(&self) -> Result<()> {
        let lens = sample_lens();
        for (m, v) in self.signals.iter() {
            if v.len() != lens[m] {
                return Err(Error::LengthMismatch(format!(
                    "sample {}: {m} has {} values, expected {}",
                    self.id,
                    v.len(),
                    lens[m]
                )));
            }
        }
        if self.arousal >= CLASSES || self.valence >= CLASSES {
            return Err(Error::TargetOutOfRange {
                target: self.arousal.max(self.valence),
                classes: CLASSES,
            });
        }
        Ok(())
    }
}

pub fn labels(samples: &[Sample], target: Target) -> Vec<usize> {
    samples.iter().map(|s| s.label(target)).collect()
}
