use super::filter::{bandpass, lowpass, notch, resample};
use super::{
    eye_column, Recording, Sample, TrialRecord, EEG_CHANNELS, EYE_FIELDS, EYE_FS, EYE_SENTINEL, PHYSIO_FS, SEGMENTS,
    SEGMENT_SECONDS,
};
use crate::error::{Error, Result};
use crate::model::PerModality;

const LINE_HZ: f64 = 50.0;
const EEG_BAND: (f64, f64) = (1.0, 45.0);
const ECG_BAND: (f64, f64) = (0.5, 45.0);
const GSR_CUTOFF: f64 = 60.0;

/// Subtracts the across-channel mean at every time step.
pub fn average_reference(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if rows.len() < 2 {
        return Err(Error::SingleChannel(rows.len()));
    }
    let t = rows[0].len();
    if rows.iter().any(|r| r.len() != t) {
        return Err(Error::LengthMismatch("EEG channels differ in length".into()));
    }
    let c = rows.len() as f64;
    let mean: Vec<f64> = (0..t).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / c).collect();
    Ok(rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect())
}

/// Keeps the ten fronto-temporal/parietal electrodes in their fixed order.
pub fn select_channels(eeg: &Recording) -> Result<Recording> {
    let rows = EEG_CHANNELS
        .iter()
        .map(|&name| {
            eeg.row(name)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::MissingChannel(name.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Recording::new(EEG_CHANNELS.iter().map(|s| s.to_string()).collect(), eeg.fs(), rows)
}

/// Samples in the 200 ms baseline window, rounded up.
pub fn baseline_window(fs: f64) -> usize {
    // The epsilon keeps exact products such as 0.2 * 60 from rounding up.
    (0.2 * fs - 1e-9).ceil() as usize
}

/// Subtracts the mean of the last 200 ms of pre-trial GSR.
pub fn baseline_correct_gsr(gsr: &[f64], pre_trial: &[f64], fs: f64) -> Result<Vec<f64>> {
    let need = baseline_window(fs);
    if pre_trial.len() < need || need == 0 {
        return Err(Error::InsufficientPreTrial {
            need: need.max(1),
            have: pre_trial.len(),
        });
    }
    let window = &pre_trial[pre_trial.len() - need..];
    let base = window.iter().sum::<f64>() / need as f64;
    Ok(gsr.iter().map(|v| v - base).collect())
}

/// Mean of the two eyes per field; a blink (`-1`) in either eye stays `-1`.
pub fn average_eyes(left: &[Vec<f64>], right: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch(format!(
            "{} left-eye fields vs {} right-eye fields",
            left.len(),
            right.len()
        )));
    }
    left.iter()
        .zip(right)
        .map(|(l, r)| {
            if l.len() != r.len() {
                return Err(Error::LengthMismatch(format!("left eye has {} samples, right eye {}", l.len(), r.len())));
            }
            Ok(l.iter()
                .zip(r)
                .map(|(&a, &b)| {
                    if a == EYE_SENTINEL || b == EYE_SENTINEL {
                        EYE_SENTINEL
                    } else {
                        (a + b) / 2.0
                    }
                })
                .collect())
        })
        .collect()
}

/// 9-point rating to three classes: 1-3, 4-6, 7-9.
pub fn map_rating(rating: i64) -> Result<usize> {
    match rating {
        1..=9 => Ok(((rating - 1) / 3) as usize),
        _ => Err(Error::RatingOutOfRange(rating)),
    }
}

/// Three consecutive 10 s windows covering the final 30 s of every
/// modality.
pub fn segment_trial(id: &str, processed: &PerModality<Recording>, arousal: usize, valence: usize) -> Result<Vec<Sample>> {
    let need_s = SEGMENTS as f64 * SEGMENT_SECONDS;
    let mut windows: PerModality<Vec<Vec<f32>>> = PerModality::default();
    for (m, rec) in processed.iter() {
        let window = (SEGMENT_SECONDS * rec.fs()).round() as usize;
        let need = SEGMENTS * window;
        if rec.len() < need {
            return Err(Error::TrialTooShort {
                modality: m,
                have_s: rec.duration_s(),
                need_s,
            });
        }
        let start = rec.len() - need;
        windows[m] = (0..SEGMENTS)
            .map(|k| {
                let lo = start + k * window;
                rec.rows()
                    .iter()
                    .flat_map(|r| r[lo..lo + window].iter().map(|&v| v as f32))
                    .collect()
            })
            .collect();
    }
    Ok((0..SEGMENTS)
        .map(|k| Sample {
            id: format!("{id}_seg{k}"),
            signals: PerModality::from_fn(|m| std::mem::take(&mut windows[m][k])),
            arousal,
            valence,
        })
        .collect())
}

fn each_row(rec: &Recording, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    rec.rows().iter().map(|r| f(r)).collect()
}

fn condition_eeg(eeg: &Recording) -> Result<Recording> {
    let fs = eeg.fs();
    let referenced = eeg.with_rows(fs, average_reference(eeg.rows())?)?;
    let rows = each_row(&referenced, |r| {
        let x = bandpass(r, EEG_BAND.0, EEG_BAND.1, fs)?;
        let x = notch(&x, LINE_HZ, fs)?;
        resample(&x, fs, PHYSIO_FS)
    })?;
    select_channels(&eeg.with_rows(PHYSIO_FS, rows)?)
}

fn condition_ecg(ecg: &Recording) -> Result<Recording> {
    let fs = ecg.fs();
    let rows = each_row(ecg, |r| {
        let x = bandpass(r, ECG_BAND.0, ECG_BAND.1, fs)?;
        let x = notch(&x, LINE_HZ, fs)?;
        resample(&x, fs, PHYSIO_FS)
    })?;
    ecg.with_rows(PHYSIO_FS, rows)
}

fn condition_gsr(gsr: &Recording, pre: &Recording) -> Result<Recording> {
    let fs = gsr.fs();
    if gsr.channels() != 1 || pre.channels() != 1 {
        return Err(Error::LengthMismatch(format!(
            "GSR needs exactly one channel, got {} (pre-trial {})",
            gsr.channels(),
            pre.channels()
        )));
    }
    let rows = each_row(gsr, |r| {
        let x = baseline_correct_gsr(r, &pre.rows()[0], pre.fs())?;
        let x = lowpass(&x, GSR_CUTOFF, fs)?;
        let x = notch(&x, LINE_HZ, fs)?;
        resample(&x, fs, PHYSIO_FS)
    })?;
    gsr.with_rows(PHYSIO_FS, rows)
}

fn condition_eye(eye: &Recording) -> Result<Recording> {
    let column = |field: &str, left: bool| {
        let name = eye_column(field, left);
        eye.row(&name).map(<[f64]>::to_vec).ok_or(Error::MissingChannel(name))
    };
    let left = EYE_FIELDS.iter().map(|f| column(f, true)).collect::<Result<Vec<_>>>()?;
    let right = EYE_FIELDS.iter().map(|f| column(f, false)).collect::<Result<Vec<_>>>()?;
    let rows = average_eyes(&left, &right)?;
    let rows = if eye.fs() == EYE_FS {
        rows
    } else {
        // Decimation only; blinks are rare enough that smoothing across
        // them is accepted for non-native rates.
        rows.iter().map(|r| resample(r, eye.fs(), EYE_FS)).collect::<Result<_>>()?
    };
    Recording::new(EYE_FIELDS.iter().map(|s| s.to_string()).collect(), EYE_FS, rows)
}

/// Full per-trial pipeline. EEG: average reference, 1-45 Hz band-pass,
/// 50 Hz notch, decimation to 128 Hz, channel selection. ECG: 0.5-45 Hz
/// band-pass, notch, decimation. GSR: baseline correction, 60 Hz
/// low-pass, notch, decimation. Eye: two-eye average at 60 Hz. Filters run
/// at the acquisition rate.
pub fn preprocess_trial(trial: &TrialRecord) -> Result<Vec<Sample>> {
    let run = || -> Result<Vec<Sample>> {
        let arousal = map_rating(trial.arousal)?;
        let valence = map_rating(trial.valence)?;
        let processed = PerModality {
            eeg: condition_eeg(&trial.eeg)?,
            ecg: condition_ecg(&trial.ecg)?,
            gsr: condition_gsr(&trial.gsr, &trial.gsr_pre)?,
            eye: condition_eye(&trial.eye)?,
        };
        segment_trial(&trial.id, &processed, arousal, valence)
    };
    run().map_err(|e| e.in_trial(&trial.id))
}
