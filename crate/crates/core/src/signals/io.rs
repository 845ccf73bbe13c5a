//! Dataset directories.
//!
//! ```text
//! root/
//!   manifest.json
//!   trial_000/
//!     eeg.csv  ecg.csv  gsr.csv  gsr_pre.csv  eye.csv
//! ```
//!
//! Every CSV has a header row of channel names and one row per time
//! sample. A processed dataset sets `"processed": true`, stores one
//! directory per 10 s sample (no `gsr_pre.csv`) and records class indices
//! instead of 1-9 ratings.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{channel_count, window_len, Recording, Sample, TrialRecord, EEG_CHANNELS, ECG_CHANNELS, EYE_FIELDS, EYE_FS, GSR_CHANNELS, PHYSIO_FS};
use crate::error::{Error, Result};
use crate::model::{Modality, PerModality};

pub const MANIFEST: &str = "manifest.json";
pub const GSR_PRE_FILE: &str = "gsr_pre.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub id: String,
    pub dir: String,
    /// Rating 1-9 for raw trials, class 0-2 for processed samples.
    pub arousal: i64,
    pub valence: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub processed: bool,
    pub rates: PerModality<f64>,
    pub channels: PerModality<Vec<String>>,
    pub entries: Vec<Entry>,
}

pub fn modality_file(m: Modality) -> String {
    format!("{m}.csv")
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join(MANIFEST);
    let file = File::open(&path).map_err(|e| Error::dataset(&path, None, format!("cannot open: {e}")))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::dataset(&path, None, e.to_string()))
}

fn write_manifest(root: &Path, manifest: &Manifest) -> Result<()> {
    let mut file = BufWriter::new(File::create(root.join(MANIFEST))?);
    serde_json::to_writer_pretty(&mut file, manifest).map_err(|e| Error::dataset(root.join(MANIFEST), None, e.to_string()))?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line());
    Error::dataset(path, row, e.to_string())
}

/// Writes `columns` (one vector per channel) under a header row.
fn write_columns<V: std::fmt::Display>(path: &Path, names: &[String], len: usize, value: impl Fn(usize, usize) -> V) -> Result<()> {
    let file = BufWriter::with_capacity(1 << 20, File::create(path)?);
    let mut w = csv::Writer::from_writer(file);
    w.write_record(names).map_err(|e| csv_error(path, e))?;
    let mut record = csv::StringRecord::with_capacity(16 * names.len(), names.len());
    for t in 0..len {
        record.clear();
        for c in 0..names.len() {
            record.push_field(&value(c, t).to_string());
        }
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a channel-per-column CSV into per-channel vectors.
fn read_columns<V: std::str::FromStr>(path: &Path) -> Result<(Vec<String>, Vec<Vec<V>>)> {
    let file = File::open(path).map_err(|e| Error::dataset(path, None, format!("cannot open: {e}")))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::with_capacity(1 << 20, file));
    let names: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(Error::dataset(path, Some(1), "header row must name every column"));
    }
    let mut cols: Vec<Vec<V>> = (0..names.len()).map(|_| Vec::new()).collect();
    let mut record = csv::StringRecord::new();
    while r.read_record(&mut record).map_err(|e| csv_error(path, e))? {
        let line = record.position().map(|p| p.line());
        for (c, field) in record.iter().enumerate() {
            let v = field
                .trim()
                .parse::<V>()
                .map_err(|_| Error::dataset(path, line, format!("column {}: cannot parse {field:?} as a number", names[c])))?;
            cols[c].push(v);
        }
    }
    Ok((names, cols))
}

fn read_recording(path: &Path, fs: f64) -> Result<Recording> {
    let (names, rows) = read_columns::<f64>(path)?;
    Recording::new(names, fs, rows).map_err(|e| Error::dataset(path, None, e.to_string()))
}

fn write_recording(path: &Path, rec: &Recording) -> Result<()> {
    write_columns(path, rec.names(), rec.len(), |c, t| rec.rows()[c][t])
}

pub fn write_raw_dataset(root: &Path, trials: &[TrialRecord]) -> Result<()> {
    fs::create_dir_all(root)?;
    let first = trials.first().ok_or(Error::EmptyDataset("no trials to write"))?;
    let mut entries = Vec::with_capacity(trials.len());
    for t in trials {
        let dir = root.join(&t.id);
        fs::create_dir_all(&dir)?;
        write_recording(&dir.join(modality_file(Modality::Eeg)), &t.eeg)?;
        write_recording(&dir.join(modality_file(Modality::Ecg)), &t.ecg)?;
        write_recording(&dir.join(modality_file(Modality::Gsr)), &t.gsr)?;
        write_recording(&dir.join(modality_file(Modality::Eye)), &t.eye)?;
        write_recording(&dir.join(GSR_PRE_FILE), &t.gsr_pre)?;
        entries.push(Entry {
            id: t.id.clone(),
            dir: t.id.clone(),
            arousal: t.arousal,
            valence: t.valence,
        });
    }
    write_manifest(
        root,
        &Manifest {
            processed: false,
            rates: PerModality {
                eeg: first.eeg.fs(),
                ecg: first.ecg.fs(),
                gsr: first.gsr.fs(),
                eye: first.eye.fs(),
            },
            channels: PerModality {
                eeg: first.eeg.names().to_vec(),
                ecg: first.ecg.names().to_vec(),
                gsr: first.gsr.names().to_vec(),
                eye: first.eye.names().to_vec(),
            },
            entries,
        },
    )
}

/// Loads one raw trial described by a manifest entry.
pub fn read_raw_trial(root: &Path, manifest: &Manifest, entry: &Entry) -> Result<TrialRecord> {
    let dir = root.join(&entry.dir);
    let rec = |m: Modality| read_recording(&dir.join(modality_file(m)), manifest.rates[m]);
    let load = || -> Result<TrialRecord> {
        Ok(TrialRecord {
            id: entry.id.clone(),
            eeg: rec(Modality::Eeg)?,
            ecg: rec(Modality::Ecg)?,
            gsr: rec(Modality::Gsr)?,
            gsr_pre: read_recording(&dir.join(GSR_PRE_FILE), manifest.rates.gsr)?,
            eye: rec(Modality::Eye)?,
            arousal: entry.arousal,
            valence: entry.valence,
        })
    };
    load().map_err(|e| e.in_trial(&entry.id))
}

pub fn read_raw_dataset(root: &Path) -> Result<Vec<TrialRecord>> {
    let manifest = read_manifest(root)?;
    if manifest.processed {
        return Err(Error::dataset(root.join(MANIFEST), None, "expected a raw dataset, found processed"));
    }
    manifest.entries.iter().map(|e| read_raw_trial(root, &manifest, e)).collect()
}

fn processed_names(m: Modality) -> Vec<String> {
    let names: &[&str] = match m {
        Modality::Eeg => &EEG_CHANNELS,
        Modality::Ecg => &ECG_CHANNELS,
        Modality::Gsr => &GSR_CHANNELS,
        Modality::Eye => &EYE_FIELDS,
    };
    names.iter().map(|s| s.to_string()).collect()
}

/// Writes samples with shortest round-trip `f32` text, so reading them
/// back is bitwise exact.
pub fn write_processed_dataset(root: &Path, samples: &[Sample]) -> Result<()> {
    fs::create_dir_all(root)?;
    let mut entries = Vec::with_capacity(samples.len());
    for s in samples {
        s.validate()?;
        let dir = root.join(&s.id);
        fs::create_dir_all(&dir)?;
        for m in Modality::ALL {
            let w = window_len(m);
            let x = &s.signals[m];
            write_columns(&dir.join(modality_file(m)), &processed_names(m), w, |c, t| x[c * w + t])?;
        }
        entries.push(Entry {
            id: s.id.clone(),
            dir: s.id.clone(),
            arousal: s.arousal as i64,
            valence: s.valence as i64,
        });
    }
    write_manifest(
        root,
        &Manifest {
            processed: true,
            rates: PerModality::from_fn(|m| if m == Modality::Eye { EYE_FS } else { PHYSIO_FS }),
            channels: PerModality::from_fn(processed_names),
            entries,
        },
    )
}

fn class_of(path: &Path, v: i64) -> Result<usize> {
    usize::try_from(v)
        .ok()
        .filter(|&c| c < super::CLASSES)
        .ok_or_else(|| Error::dataset(path, None, format!("class label {v} outside 0..{}", super::CLASSES)))
}

pub fn read_processed_dataset(root: &Path) -> Result<Vec<Sample>> {
    let manifest = read_manifest(root)?;
    let mpath = root.join(MANIFEST);
    if !manifest.processed {
        return Err(Error::dataset(&mpath, None, "expected a processed dataset, found raw"));
    }
    manifest
        .entries
        .iter()
        .map(|e| {
            let dir = root.join(&e.dir);
            let signals = PerModality::try_from_fn(|m| -> Result<Vec<f32>> {
                let path = dir.join(modality_file(m));
                let (names, cols) = read_columns::<f32>(&path)?;
                if names.len() != channel_count(m) || cols.iter().any(|c| c.len() != window_len(m)) {
                    return Err(Error::dataset(
                        &path,
                        None,
                        format!(
                            "{m} segment must be {} channels x {} samples, found {} x {}",
                            channel_count(m),
                            window_len(m),
                            names.len(),
                            cols.first().map_or(0, Vec::len)
                        ),
                    ));
                }
                Ok(cols.concat())
            })?;
            Ok(Sample {
                id: e.id.clone(),
                signals,
                arousal: class_of(&mpath, e.arousal)?,
                valence: class_of(&mpath, e.valence)?,
            })
        })
        .collect()
}
