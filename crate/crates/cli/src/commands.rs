use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hyperfuse::signals::io::{read_manifest, read_processed_dataset, read_raw_trial, write_processed_dataset, write_raw_dataset};
use hyperfuse::signals::{preprocess_trial, synthesize_dataset, Sample, SynthConfig, Target};
use hyperfuse::training::{evaluate, lr_search, run_repeated, Metrics};
use hyperfuse::{Modality, ModelConfig, PerModality};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, Metadata};
use crate::config::RunConfigFile;
use crate::{Command, InputError};

pub fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Preprocess { input, output, config } => preprocess(input, output, config.as_deref(), out),
        Command::Synth {
            output,
            trials,
            seed,
            separability,
        } => synth(&output, trials, seed, separability, out),
        Command::Train {
            data,
            target,
            config,
            runs,
            out: ckpt,
            report,
        } => train(data, target, config.as_deref(), runs, &ckpt, report, out),
        Command::Search {
            data,
            trials,
            config,
            target,
        } => search(data, trials, config.as_deref(), target, out),
        Command::Eval {
            model,
            data,
            target,
            all,
            json,
        } => eval(&model, &data, target, all, json.as_deref(), out),
    }
}

/// Mean and standard deviation as `xx.xx ± yy.yy`.
pub fn format_pm(mean: f64, std: f64) -> String {
    format!("{mean:.2} ± {std:.2}")
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn resolve(flag: Option<PathBuf>, from_config: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| from_config.clone())
        .ok_or_else(|| input(format!("no {what} given (flag or [data] entry in the config)")))
}

fn resolve_target(flag: Option<Target>, cfg: &RunConfigFile) -> Result<Target> {
    flag.or(cfg.target)
        .ok_or_else(|| input("no target given (--target or `target` in the config)"))
}

fn preprocess(input_dir: Option<PathBuf>, output: Option<PathBuf>, config: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfigFile::load_or_default(config)?;
    let input_dir = resolve(input_dir, &cfg.data.raw, "input dataset")?;
    let output = resolve(output, &cfg.data.processed, "output directory")?;
    let manifest = read_manifest(&input_dir)?;
    if manifest.processed {
        return Err(input(format!("{} is already processed", input_dir.display())));
    }
    let mut samples = Vec::new();
    for entry in &manifest.entries {
        let trial = read_raw_trial(&input_dir, &manifest, entry)?;
        let segs = preprocess_trial(&trial)?;
        writeln!(out, "{}: {} samples", entry.id, segs.len())?;
        samples.extend(segs);
    }
    write_processed_dataset(&output, &samples)?;
    writeln!(
        out,
        "wrote {} samples from {} trials to {}",
        samples.len(),
        manifest.entries.len(),
        output.display()
    )?;
    Ok(())
}

fn synth(output: &Path, trials: usize, seed: u64, separability: Option<f64>, out: &mut dyn Write) -> Result<()> {
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        trials,
        seed,
        separability: separability.unwrap_or(defaults.separability),
        ..defaults
    };
    let records = synthesize_dataset(&cfg)?;
    write_raw_dataset(output, &records)?;
    writeln!(out, "wrote {} synthetic trials to {}", records.len(), output.display())?;
    Ok(())
}

/// Rejects datasets whose segment lengths differ from the model inputs,
/// naming both.
fn check_shapes(samples: &[Sample], config: &ModelConfig) -> Result<()> {
    let first = samples.first().ok_or_else(|| input("dataset has no samples"))?;
    let have: PerModality<usize> = first.signals.map(|_, v| v.len());
    if have != config.input_lens {
        return Err(input(format!(
            "dataset inputs {} do not match model inputs {}",
            shapes(&have),
            shapes(&config.input_lens)
        )));
    }
    Ok(())
}

fn shapes(lens: &PerModality<usize>) -> String {
    let parts: Vec<String> = Modality::ALL.iter().map(|&m| format!("{m}={}", lens[m])).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub best_epoch: usize,
    pub checkpoint: PathBuf,
    pub accuracy: f64,
    pub f1_macro: f64,
}

/// JSON report of a `train` invocation. `confusion` holds one matrix per
/// run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub target: Target,
    pub runs: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub confusion: Vec<Vec<Vec<usize>>>,
    pub per_run: Vec<RunSummary>,
}

/// `model.ckpt` for a single run, `model.run{r}.ckpt` otherwise.
pub fn run_checkpoint_path(base: &Path, run: usize, runs: usize) -> PathBuf {
    if runs == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.run{run}.{}", ext.to_string_lossy()),
        None => format!("{stem}.run{run}"),
    };
    base.with_file_name(name)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn train(
    data: Option<PathBuf>,
    target: Option<Target>,
    config: Option<&Path>,
    runs: Option<usize>,
    ckpt: &Path,
    report_path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut cfg = RunConfigFile::load_or_default(config)?;
    let data = resolve(data, &cfg.data.processed, "dataset")?;
    let target = resolve_target(target, &cfg)?;
    if let Some(r) = runs {
        cfg.train.runs = r;
    }
    cfg.train.validate()?;
    let samples = read_processed_dataset(&data)?;
    check_shapes(&samples, &cfg.model)?;
    let result = run_repeated(&samples, target, &cfg.model, &cfg.train)?;

    let total = result.runs.len();
    let mut per_run = Vec::with_capacity(total);
    for (r, run) in result.runs.iter().enumerate() {
        let path = run_checkpoint_path(ckpt, r, total);
        let metadata = Metadata {
            target,
            seed: run.seed,
            split_seed: cfg.train.seed,
            best_epoch: run.best_epoch,
            best_val_f1: run.best_val_f1,
            dataset_size: samples.len(),
            test_indices: result.split.test.clone(),
            metrics: run.test.clone(),
        };
        Checkpoint::from_model(&run.model, metadata)
            .save(&path)
            .with_context(|| format!("cannot write checkpoint {}", path.display()))?;
        let history = with_suffix(&path, ".history.csv");
        let file = File::create(&history).with_context(|| format!("cannot create {}", history.display()))?;
        run.history.write_csv(BufWriter::new(file))?;
        per_run.push(RunSummary {
            seed: run.seed,
            best_epoch: run.best_epoch,
            checkpoint: path,
            accuracy: run.test.accuracy,
            f1_macro: run.test.f1_macro,
        });
    }
    let report = Report {
        target,
        runs: total,
        f1_mean: result.f1_mean,
        f1_std: result.f1_std,
        acc_mean: result.acc_mean,
        acc_std: result.acc_std,
        confusion: result.runs.iter().map(|r| r.test.confusion.clone()).collect(),
        per_run,
    };
    let report_path = report_path.unwrap_or_else(|| ckpt.with_extension("json"));
    write_json(&report_path, &report)?;

    writeln!(
        out,
        "target {target}: {} train / {} validation / {} test samples",
        result.split.train.len(),
        result.split.validation.len(),
        result.split.test.len()
    )?;
    writeln!(out, "{:<5} {:>6} {:>10} {:>9} {:>9}", "run", "seed", "best_epoch", "accuracy", "f1_macro")?;
    for (r, s) in report.per_run.iter().enumerate() {
        writeln!(
            out,
            "{r:<5} {:>6} {:>10} {:>9.2} {:>9.2}",
            s.seed, s.best_epoch, s.accuracy, s.f1_macro
        )?;
    }
    writeln!(out, "F1        {}", format_pm(report.f1_mean, report.f1_std))?;
    writeln!(out, "accuracy  {}", format_pm(report.acc_mean, report.acc_std))?;
    writeln!(out, "report written to {}", report_path.display())?;
    Ok(())
}

fn search(data: Option<PathBuf>, trials: usize, config: Option<&Path>, target: Option<Target>, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfigFile::load_or_default(config)?;
    let data = resolve(data, &cfg.data.processed, "dataset")?;
    let target = resolve_target(target, &cfg)?;
    let samples = read_processed_dataset(&data)?;
    check_shapes(&samples, &cfg.model)?;
    let report = lr_search(&samples, target, &cfg.model, &cfg.train, trials)?;
    writeln!(out, "{:<6} {:>10} {:>8}", "trial", "max_lr", "val_f1")?;
    for (i, t) in report.trials.iter().enumerate() {
        writeln!(out, "{:<6} {:>10.6} {:>8.2}", i + 1, t.max_lr, t.score)?;
    }
    writeln!(out, "best max_lr = {:.6}", report.best)?;
    Ok(())
}

fn print_metrics(m: &Metrics, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "accuracy  {:.2}", m.accuracy)?;
    writeln!(out, "f1_macro  {:.2}", m.f1_macro)?;
    writeln!(out, "{:<6} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1")?;
    for c in 0..m.f1.len() {
        writeln!(
            out,
            "{c:<6} {:>9.4} {:>9.4} {:>9.4}",
            m.precision[c], m.recall[c], m.f1[c]
        )?;
    }
    writeln!(out, "confusion (rows true, columns predicted)")?;
    for row in &m.confusion {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>5}")).collect();
        writeln!(out, "{}", cells.join(""))?;
    }
    Ok(())
}

fn eval(model: &Path, data: &Path, target: Option<Target>, all: bool, json: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let ckpt = Checkpoint::load(model).with_context(|| format!("cannot load checkpoint {}", model.display()))?;
    let samples = read_processed_dataset(data)?;
    check_shapes(&samples, &ckpt.config)?;
    let target = target.unwrap_or(ckpt.metadata.target);
    let net = ckpt.to_model()?;
    let use_split = !all && ckpt.metadata.dataset_size == samples.len();
    let subset: Vec<Sample> = if use_split {
        let idx = &ckpt.metadata.test_indices;
        if let Some(&bad) = idx.iter().find(|&&i| i >= samples.len()) {
            return Err(input(format!("stored test index {bad} outside dataset")));
        }
        idx.iter().map(|&i| samples[i].clone()).collect()
    } else {
        samples
    };
    let metrics = evaluate(&net, &subset, target)?;
    writeln!(
        out,
        "target {target}, {} samples ({})",
        subset.len(),
        if use_split { "stored test split" } else { "whole dataset" }
    )?;
    print_metrics(&metrics, out)?;
    if let Some(path) = json {
        write_json(path, &metrics)?;
    }
    Ok(())
}
