//! Synthetic trials with the raw acquisition layout. Each modality carries
//! two time-locked integer-Hz oscillations whose amplitudes grow
//! geometrically with the arousal and valence class, buried in white
//! noise, random-phase background rhythm, DC offsets and 50 Hz line
//! interference. Integer frequencies keep the same phase at every 10 s
//! segment boundary.

use std::f64::consts::PI;

use super::{
    eye_column, Recording, TrialRecord, ECG_CHANNELS, EYE_FIELDS, EYE_FS, EYE_SENTINEL, GSR_CHANNELS, RAW_EEG_CHANNELS,
    RAW_FS,
};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub trials: usize,
    pub seed: u64,
    /// Amplitude ratio between consecutive classes. Must exceed the
    /// 1.25 / 0.75 spread that amplitude augmentation introduces.
    pub separability: f64,
    pub seconds: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            trials: 30,
            seed: 0,
            separability: 3.0,
            seconds: 60.0,
        }
    }
}

/// Per-modality layout of the class components.
struct Profile {
    arousal_hz: f64,
    valence_hz: f64,
    amplitude: f64,
    noise: f64,
}

const EEG: Profile = Profile {
    arousal_hz: 12.0,
    valence_hz: 6.0,
    amplitude: 0.5,
    noise: 1.0,
};
const ECG: Profile = Profile {
    arousal_hz: 5.0,
    valence_hz: 3.0,
    amplitude: 0.5,
    noise: 1.0,
};
const GSR: Profile = Profile {
    arousal_hz: 2.0,
    valence_hz: 1.0,
    amplitude: 0.2,
    noise: 0.3,
};
const EYE: Profile = Profile {
    arousal_hz: 4.0,
    valence_hz: 2.0,
    amplitude: 0.5,
    noise: 1.0,
};

/// Millivolt-style fixed precision so the CSV text round-trips exactly.
fn quantize(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn rating(class: usize, rng: &mut Rng) -> i64 {
    (3 * class + 1 + rng.below(3)) as i64
}

struct Channel<'a> {
    profile: &'a Profile,
    fs: f64,
    /// Signed weights of the arousal and valence components.
    weights: (f64, f64),
    amps: (f64, f64),
    offset: f64,
    line: f64,
}

impl Channel<'_> {
    fn render(&self, n: usize, rng: &mut Rng) -> Vec<f64> {
        let p = self.profile;
        let bg_hz = rng.uniform_range(15.0, 25.0).min(self.fs / 2.0 - 1.0);
        let bg_phase = rng.uniform_range(0.0, 2.0 * PI);
        (0..n)
            .map(|i| {
                let t = i as f64 / self.fs;
                let arousal = self.weights.0 * self.amps.0 * (2.0 * PI * p.arousal_hz * t).sin();
                let valence = self.weights.1 * self.amps.1 * (2.0 * PI * p.valence_hz * t).sin();
                let background = 0.5 * p.noise * (2.0 * PI * bg_hz * t + bg_phase).sin();
                let line = self.line * (2.0 * PI * 50.0 * t).sin();
                quantize(self.offset + arousal + valence + background + line + p.noise * rng.normal())
            })
            .collect()
    }
}

fn synth_trial(index: usize, config: &SynthConfig, rng: &mut Rng) -> Result<TrialRecord> {
    let arousal = index % 3;
    let valence = (arousal + index / 3) % 3;
    let sep = config.separability;
    let n_raw = (config.seconds * RAW_FS).round() as usize;
    let n_eye = (config.seconds * EYE_FS).round() as usize;
    let amps = |p: &Profile| (p.amplitude * sep.powi(arousal as i32), p.amplitude * sep.powi(valence as i32));

    let physio = |names: &[&str], p: &Profile, rng: &mut Rng, offset: f64| -> Result<Recording> {
        let rows = (0..names.len())
            .map(|c| {
                // Alternating signs keep the components alive through the
                // average reference.
                let w_a = if c % 2 == 0 { 1.0 } else { -1.0 };
                let w_v = if (c / 2) % 2 == 0 { 1.0 } else { -1.0 };
                Channel {
                    profile: p,
                    fs: RAW_FS,
                    weights: (w_a, w_v),
                    amps: amps(p),
                    offset: offset + rng.uniform_range(-20.0, 20.0),
                    line: rng.uniform_range(0.5, 2.0),
                }
                .render(n_raw, rng)
            })
            .collect();
        Recording::new(names.iter().map(|s| s.to_string()).collect(), RAW_FS, rows)
    };

    let eeg = physio(&RAW_EEG_CHANNELS, &EEG, rng, 0.0)?;
    let ecg = physio(&ECG_CHANNELS, &ECG, rng, 0.0)?;
    let level = rng.uniform_range(2.0, 8.0);
    let gsr = Recording::new(
        GSR_CHANNELS.iter().map(|s| s.to_string()).collect(),
        RAW_FS,
        vec![Channel {
            profile: &GSR,
            fs: RAW_FS,
            weights: (1.0, 1.0),
            amps: amps(&GSR),
            offset: level,
            line: 0.1,
        }
        .render(n_raw, rng)],
    )?;
    let gsr_pre = Recording::new(
        GSR_CHANNELS.iter().map(|s| s.to_string()).collect(),
        RAW_FS,
        vec![(0..RAW_FS as usize).map(|_| quantize(level + 0.05 * rng.normal())).collect()],
    )?;

    // Eye fields: base level and scale of pupil, gaze x/y, distance.
    let bases = [3.5, 0.5, 0.5, 60.0];
    let scales = [0.2, 0.05, 0.05, 2.0];
    let blinks: Vec<(usize, bool, bool)> = {
        let mut v = Vec::new();
        let mut t = rng.below(180);
        while t + 8 < n_eye {
            let which = rng.below(3);
            v.push((t, which != 2, which != 1));
            t += 120 + rng.below(180);
        }
        v
    };
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for left in [true, false] {
        for (f, field) in EYE_FIELDS.iter().enumerate() {
            let ch = Channel {
                profile: &EYE,
                fs: EYE_FS,
                weights: (1.0, 1.0),
                amps: amps(&EYE),
                offset: 0.0,
                line: 0.0,
            };
            let mut row: Vec<f64> = ch
                .render(n_eye, rng)
                .into_iter()
                .map(|v| quantize(bases[f] + scales[f] * v))
                .collect();
            for &(start, l, r) in &blinks {
                if (left && l) || (!left && r) {
                    row[start..start + 6].iter_mut().for_each(|v| *v = EYE_SENTINEL);
                }
            }
            names.push(eye_column(field, left));
            rows.push(row);
        }
    }
    let eye = Recording::new(names, EYE_FS, rows)?;

    Ok(TrialRecord {
        id: format!("trial_{index:03}"),
        eeg,
        ecg,
        gsr,
        gsr_pre,
        eye,
        arousal: rating(arousal, rng),
        valence: rating(valence, rng),
    })
}

/// Raw-layout trials with balanced arousal and valence classes (trial `i`
/// has arousal class `i mod 3`). Deterministic in `config.seed`.
pub fn synthesize_dataset(config: &SynthConfig) -> Result<Vec<TrialRecord>> {
    if config.trials < 6 {
        return Err(Error::InvalidConfig(format!(
            "need at least 6 trials (2 per class), got {}",
            config.trials
        )));
    }
    if !(config.separability >= 1.0) {
        return Err(Error::InvalidConfig(format!("separability {} must be at least 1", config.separability)));
    }
    let mut master = Rng::new(config.seed);
    (0..config.trials)
        .map(|i| synth_trial(i, config, &mut master.fork()))
        .collect()
}
