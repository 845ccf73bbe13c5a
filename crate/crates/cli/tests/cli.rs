use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hyperfuse::signals::io::{read_manifest, read_processed_dataset};
use hyperfuse::signals::Target;
use hyperfuse::training::{Metrics, TrainConfig};
use hyperfuse::{HyperFuseNet, ModelConfig, Rng};
use hyperfuse_cli::{Checkpoint, Metadata, Report};

fn hyperfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperfuse")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tree_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Raw and processed 12-trial synthetic dataset.
fn small_dataset(dir: &Path) -> (PathBuf, PathBuf) {
    let raw = dir.join("raw");
    let processed = dir.join("processed");
    assert!(hyperfuse(&["synth", "--output", s(&raw), "--trials", "12", "--seed", "3"]).status.success());
    let o = hyperfuse(&["preprocess", "--input", s(&raw), "--output", s(&processed)]);
    assert!(o.status.success(), "{}", stderr(&o));
    (raw, processed)
}

fn quick_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("quick.toml");
    fs::write(
        &path,
        format!("[model]\nscale = 32\n[train]\nepochs = 3\npatience = 2\naugment = false\nseed = 1\nruns = 1\nsearch_epochs = 1\n{extra}"),
    )
    .unwrap();
    path
}

#[test]
fn synth_rejects_too_few_trials() {
    let dir = tempfile::tempdir().unwrap();
    let o = hyperfuse(&["synth", "--output", s(&dir.path().join("x")), "--trials", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("6 trials"), "{}", stderr(&o));
}

#[test]
fn synth_and_preprocess_full_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    let again = dir.path().join("raw2");
    for out in [&raw, &again] {
        let o = hyperfuse(&["synth", "--output", s(out), "--trials", "30", "--seed", "9"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(tree_bytes(&raw), tree_bytes(&again));
    let manifest = read_manifest(&raw).unwrap();
    assert_eq!(manifest.channels.eeg.len(), 32);
    for ch in ["F3", "F4", "F7", "F8", "FC5", "FC6", "T7", "T8", "P7", "P8"] {
        assert!(manifest.channels.eeg.iter().any(|c| c == ch), "{ch}");
    }

    let p1 = dir.path().join("p1");
    let p2 = dir.path().join("p2");
    for out in [&p1, &p2] {
        let o = hyperfuse(&["preprocess", "--input", s(&raw), "--output", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("wrote 90 samples from 30 trials"), "{}", stdout(&o));
        assert!(stdout(&o).contains("trial_000: 3 samples"));
    }
    assert_eq!(tree_bytes(&p1), tree_bytes(&p2));
    assert_eq!(read_processed_dataset(&p1).unwrap().len(), 90);
}

#[test]
fn malformed_raw_input_names_trial_file_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    assert!(hyperfuse(&["synth", "--output", s(&raw), "--trials", "6"]).status.success());

    // Drop the F3 column from one trial.
    let eeg = raw.join("trial_004").join("eeg.csv");
    let text = fs::read_to_string(&eeg).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "F3").unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(col);
            cells.join(",") + "\n"
        })
        .collect();
    fs::write(&eeg, stripped).unwrap();
    let o = hyperfuse(&["preprocess", "--input", s(&raw), "--output", s(&dir.path().join("p"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trial_004"), "{}", stderr(&o));
    assert!(stderr(&o).contains("F3"), "{}", stderr(&o));

    fs::write(&eeg, text).unwrap();
    let ecg = raw.join("trial_002").join("ecg.csv");
    let mut lines: Vec<String> = fs::read_to_string(&ecg).unwrap().lines().map(String::from).collect();
    lines[4] = lines[4].replacen(|c: char| c.is_ascii_digit(), "x", 1);
    fs::write(&ecg, lines.join("\n") + "\n").unwrap();
    let o = hyperfuse(&["preprocess", "--input", s(&raw), "--output", s(&dir.path().join("p"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("trial_002") && err.contains("ecg.csv") && err.contains("row 5"), "{err}");
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[train]\nmax_lr = 0.003\nbatchsize = 16\n").unwrap();
    let o = hyperfuse(&["train", "--data", "nowhere", "--target", "arousal", "--config", s(&cfg), "--out", "x.ckpt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("batchsize"), "{}", stderr(&o));
}

#[test]
fn missing_dataset_is_input_error() {
    let o = hyperfuse(&["eval", "--model", "missing.ckpt", "--data", "missing"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hyperfuse(&["train", "--out", "x.ckpt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no dataset"), "{}", stderr(&o));
}

#[test]
fn train_search_eval_round() {
    let dir = tempfile::tempdir().unwrap();
    let (_, processed) = small_dataset(dir.path());
    let cfg = quick_config(dir.path(), "");

    let mut reports = Vec::new();
    for (name, target) in [("a1", "arousal"), ("a2", "arousal"), ("v", "valence")] {
        let ckpt = dir.path().join(format!("{name}.ckpt"));
        let o = hyperfuse(&["train", "--data", s(&processed), "--target", target, "--config", s(&cfg), "--out", s(&ckpt)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let json = fs::read_to_string(ckpt.with_extension("json")).unwrap();
        let first = stdout(&o).lines().next().unwrap().to_string();
        reports.push((json, first, ckpt));
    }
    // Fixed seeds: identical reports apart from the checkpoint path.
    assert_eq!(reports[0].0.replace("a1.ckpt", "X"), reports[1].0.replace("a2.ckpt", "X"));
    // Targets differ in labels, not in sample counts.
    let total = |line: &str| -> usize {
        line.split_once(':').unwrap().1.split('/').map(|p| p.split_whitespace().next().unwrap().parse::<usize>().unwrap()).sum()
    };
    assert_eq!(total(&reports[0].1), 36);
    assert_eq!(total(&reports[2].1), 36);
    assert!(reports[2].1.starts_with("target valence"));
    let history = fs::read_to_string(dir.path().join("a1.ckpt.history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_loss,val_f1,lr\n"));
    assert!(history.lines().count() <= 4);

    // Evaluation reproduces the training report.
    let report: Report = serde_json::from_str(&reports[0].0).unwrap();
    let metrics_path = dir.path().join("m.json");
    let o = hyperfuse(&["eval", "--model", s(&reports[0].2), "--data", s(&processed), "--json", s(&metrics_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Metrics = serde_json::from_str(&fs::read_to_string(&metrics_path).unwrap()).unwrap();
    assert_eq!(m.accuracy, report.per_run[0].accuracy);
    assert_eq!(m.f1_macro, report.per_run[0].f1_macro);
    assert!(stdout(&o).contains(&format!("accuracy  {:.2}", m.accuracy)));
    let ckpt = Checkpoint::load(&reports[0].2).unwrap();
    let samples = read_processed_dataset(&processed).unwrap();
    for (c, row) in m.confusion.iter().enumerate() {
        let actual = ckpt.metadata.test_indices.iter().filter(|&&i| samples[i].arousal == c).count();
        assert_eq!(row.iter().sum::<usize>(), actual);
    }

    // Search: one trial, one row, inside the range, deterministic.
    let run_search = || {
        let o = hyperfuse(&["search", "--data", s(&processed), "--trials", "1", "--config", s(&cfg), "--target", "arousal"]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let out = run_search();
    assert_eq!(out, run_search());
    let rows: Vec<&str> = out.lines().skip(1).filter(|l| !l.starts_with("best")).collect();
    assert_eq!(rows.len(), 1);
    let lr: f64 = rows[0].split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((0.001..=0.008).contains(&lr));
}

#[test]
fn eval_rejects_wrong_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let (_, processed) = small_dataset(dir.path());
    let mut config = ModelConfig::default().with_scale(32);
    config.input_lens.eeg = 640;
    let model = HyperFuseNet::build(&config, &mut Rng::new(0)).unwrap();
    let metadata = Metadata {
        target: Target::Arousal,
        seed: 0,
        split_seed: 0,
        best_epoch: 1,
        best_val_f1: 0.0,
        dataset_size: 36,
        test_indices: vec![0],
        metrics: Metrics::from_predictions(&[0], &[0], 3).unwrap(),
    };
    let path = dir.path().join("odd.ckpt");
    Checkpoint::from_model(&model, metadata).save(&path).unwrap();
    let o = hyperfuse(&["eval", "--model", s(&path), "--data", s(&processed)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("eeg=12800") && err.contains("eeg=640"), "{err}");
}

#[test]
fn runs_flag_writes_one_checkpoint_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let (_, processed) = small_dataset(dir.path());
    let cfg = quick_config(dir.path(), "");
    let ckpt = dir.path().join("m.ckpt");
    let o = hyperfuse(&["train", "--data", s(&processed), "--target", "arousal", "--config", s(&cfg), "--runs", "2", "--out", s(&ckpt)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in 0..2 {
        let c = Checkpoint::load(&dir.path().join(format!("m.run{r}.ckpt"))).unwrap();
        assert_eq!(c.metadata.seed, TrainConfig { seed: 1, ..Default::default() }.seed + r);
    }
    let report: Report = serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(report.runs, 2);
    assert_eq!(report.confusion.len(), 2);
    assert!(stdout(&o).contains(" ± "));
}
