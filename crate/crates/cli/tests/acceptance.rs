//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hyperfuse::hyperalg::{algebra_matrices, hamilton_matrix, hamilton_product, HypercomplexNumber};
use hyperfuse::layers::{cross_entropy, BatchNorm1d, Linear, Phase, PhmLinear, StateDict};
use hyperfuse::signals::io::read_processed_dataset;
use hyperfuse::signals::{
    augment, bandpass, labels, notch, resample, stratified_split, Sample, SplitIndex, Target, TrainingPartition,
};
use hyperfuse::training::{mean_std, one_cycle_lr, EarlyStopping, Metrics, TrainConfig, Verdict};
use hyperfuse::{Modality, Rng, Tensor};
use hyperfuse_cli::{Checkpoint, Report};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Fixture {
    dir: tempfile::TempDir,
    processed: PathBuf,
    samples: Vec<Sample>,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("hyperfuse").chain(args.iter().copied());
    let code = hyperfuse_cli::run(argv, &mut out);
    (code, String::from_utf8_lossy(&out).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn fixture() -> Result<Fixture, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let raw = dir.path().join("raw");
    let processed = dir.path().join("processed");
    let (code, out) = cli(&["synth", "--output", p(&raw), "--trials", "30", "--seed", "0"]);
    ensure!(code == 0, "synth failed: {out}");
    let (code, out) = cli(&["preprocess", "--input", p(&raw), "--output", p(&processed)]);
    ensure!(code == 0, "preprocess failed: {out}");
    let samples = read_processed_dataset(&processed).map_err(|e| e.to_string())?;
    Ok(Fixture { dir, processed, samples })
}

fn timed(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took <= limit, "took {took:?}, limit {limit:?}");
    Ok(took)
}

// 1. Quaternion exactness.
fn quaternion_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(1);
    let algebra: Vec<Tensor<f64>> = algebra_matrices(4)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|m| Tensor::new(&[4, 4], m.entries().to_vec()).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let q: Vec<f64> = (0..4).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
        let filters = q.iter().map(|&v| Tensor::new(&[1, 1], vec![v]).unwrap()).collect();
        let layer = PhmLinear::from_parts(algebra.clone(), filters, Tensor::zeros(&[4])).map_err(|e| e.to_string())?;
        ensure!(layer.parameters().iter().all(|(n, _)| !n.starts_with("algebra")), "algebra not frozen");
        let quat = HypercomplexNumber::quaternion(q[0], q[1], q[2], q[3]);
        let w = layer.weight().map_err(|e| e.to_string())?.to_vec();
        let h = hamilton_matrix(&quat).map_err(|e| e.to_string())?;
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        ensure!(bits(&w) == bits(h.entries()), "trial {trial}: weight differs from Hamilton matrix");

        let x: Vec<f64> = (0..4).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
        let y = layer
            .forward(&Tensor::new(&[1, 4], x.clone()).unwrap())
            .map_err(|e| e.to_string())?
            .to_vec();
        let expected = hamilton_product(&quat, &HypercomplexNumber::quaternion(x[0], x[1], x[2], x[3]))
            .map_err(|e| e.to_string())?;
        let norm = expected.norm().max(f64::MIN_POSITIVE);
        let err = y.iter().zip(expected.coefficients()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / norm;
        worst = worst.max(err);
    }
    ensure!(worst <= 1e-12, "product relative error {worst:e}");
    let took = timed(Duration::from_secs(1), start)?;
    Ok(format!("200 quaternions bitwise, product rel err {worst:.1e}, {took:.2?}"))
}

// 2. Parameter-count law.
fn parameter_count_law() -> Outcome {
    let mut notes = Vec::new();
    for (n, d_in, d_out) in [(2usize, 64usize, 32usize), (4, 1792, 896), (4, 224, 112)] {
        let layer = PhmLinear::<f32>::new(n, d_in, d_out, &mut Rng::new(0)).map_err(|e| e.to_string())?;
        let stored: usize = layer.parameters().iter().map(|(_, t)| t.numel()).sum();
        let weights = n * n * n + d_in * d_out / n;
        ensure!(stored == weights + d_out, "({n},{d_in},{d_out}): {stored} stored, expected {}", weights + d_out);
        let real = d_in * d_out;
        let ratio = weights as f64 / real as f64;
        let hi = 1.0 / n as f64 + (n * n * n) as f64 / real as f64;
        ensure!(ratio >= 1.0 / n as f64 && ratio <= hi, "ratio {ratio} outside [1/{n}, {hi}]");
        notes.push(format!("({n},{d_in},{d_out})={weights}+{d_out}"));
    }
    Ok(notes.join(" "))
}

// 3. Gradient integrity.
fn rand_tensor(shape: &[usize], rng: &mut Rng, requires_grad: bool) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    if requires_grad {
        Tensor::parameter(shape, data).unwrap()
    } else {
        Tensor::new(shape, data).unwrap()
    }
}

/// FC -> batch norm -> PHM -> cross-entropy on one random configuration.
/// Returns the largest relative error over every parameter and the input.
fn gradient_case(seed: u64) -> Result<(f64, usize), String> {
    let mut rng = Rng::new(seed);
    let n = [2usize, 4][rng.below(2)];
    let batch = 3 + rng.below(4);
    let d0 = 3 + rng.below(5);
    let d1 = n * (1 + rng.below(3));
    let d2 = n * (1 + rng.below(2));
    let classes = d2;
    let x = rand_tensor(&[batch, d0], &mut rng, true);
    let fc = Linear::from_parts(rand_tensor(&[d1, d0], &mut rng, true), rand_tensor(&[d1], &mut rng, true))
        .map_err(|e| e.to_string())?;
    let bn = BatchNorm1d::<f64>::new(d1);
    bn.gamma().set_data((0..d1).map(|_| rng.uniform_range(0.5, 1.5)).collect()).unwrap();
    bn.beta().set_data((0..d1).map(|_| rng.uniform_range(-0.5, 0.5)).collect()).unwrap();
    let algebra = (0..n).map(|_| rand_tensor(&[n, n], &mut rng, true)).collect();
    let filters = (0..n).map(|_| rand_tensor(&[d2 / n, d1 / n], &mut rng, true)).collect();
    let phm = PhmLinear::from_parts(algebra, filters, rand_tensor(&[d2], &mut rng, true)).map_err(|e| e.to_string())?;
    let targets: Vec<usize> = (0..batch).map(|_| rng.below(classes)).collect();

    let mut inputs = vec![("x".to_string(), x.clone())];
    inputs.extend(fc.parameters());
    inputs.extend(bn.parameters());
    inputs.extend(phm.parameters());
    let mut drop_rng = Rng::new(0);
    let loss_fn = |rng: &mut Rng| -> f64 {
        let h = fc.forward(&x).unwrap();
        let h = bn.forward(&h, &Phase::Train(rng)).unwrap();
        let logits = phm.forward(&h).unwrap();
        cross_entropy(&logits, &targets).unwrap().item()
    };
    {
        let h = bn.forward(&fc.forward(&x).unwrap(), &Phase::Train(&mut drop_rng)).unwrap();
        cross_entropy(&phm.forward(&h).unwrap(), &targets).unwrap().backward().map_err(|e| e.to_string())?;
    }
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (name, t) in &inputs {
        let analytic = t.grad().ok_or_else(|| format!("{name}: no gradient"))?;
        let base = t.to_vec();
        for i in 0..base.len() {
            let mut probe = base.clone();
            probe[i] = base[i] + step;
            t.set_data(probe.clone()).unwrap();
            let up = loss_fn(&mut drop_rng);
            probe[i] = base[i] - step;
            t.set_data(probe).unwrap();
            let down = loss_fn(&mut drop_rng);
            t.set_data(base.clone()).unwrap();
            let numeric = (up - down) / (2.0 * step);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
        ensure!(!name.contains("algebra") || analytic.iter().any(|&g| g != 0.0), "{name}: zero gradient");
    }
    Ok((worst, checked))
}

fn gradient_integrity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..12 {
        let (err, count) = gradient_case(seed)?;
        ensure!(err <= 1e-4, "configuration {seed}: relative error {err:e}");
        worst = worst.max(err);
        checked += count;
    }
    let took = timed(Duration::from_secs(30), start)?;
    Ok(format!("12 configurations, {checked} partials, max rel err {worst:.1e}, {took:.2?}"))
}

// 4. Signal pipeline.
fn tone(freq: f64, fs: f64, seconds: f64) -> Vec<f64> {
    let n = (fs * seconds) as usize;
    (0..n).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin()).collect()
}

/// Least-squares amplitude of a `freq` sinusoid over the middle half.
fn amplitude(x: &[f64], freq: f64, fs: f64) -> f64 {
    let (lo, hi) = (x.len() / 4, 3 * x.len() / 4);
    let w = 2.0 * std::f64::consts::PI * freq / fs;
    let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &y) in x.iter().enumerate().take(hi).skip(lo) {
        let (s, c) = (w * i as f64).sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        ys += y * s;
        yc += y * c;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    a.hypot(b)
}

fn db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

fn signal_pipeline() -> Outcome {
    let start = Instant::now();
    let fs = 256.0;
    let e = |r: hyperfuse::Result<Vec<f64>>| r.map_err(|e| e.to_string());
    let line = tone(50.0, fs, 20.0);
    let notch_db = -db(amplitude(&e(notch(&line, 50.0, fs))?, 50.0, fs));
    ensure!(notch_db >= 20.0, "notch attenuates {notch_db:.2} dB");

    let alpha = tone(10.0, fs, 20.0);
    let pass_db = db(amplitude(&e(bandpass(&alpha, 1.0, 45.0, fs))?, 10.0, fs));
    ensure!(pass_db.abs() <= 1.0, "bandpass gain at 10 Hz {pass_db:.3} dB");
    let dc = vec![1.0; alpha.len()];
    let dc_out = e(bandpass(&dc, 1.0, 45.0, fs))?;
    let dc_left = dc_out[dc_out.len() / 4..3 * dc_out.len() / 4].iter().map(|v| v.abs()).fold(0.0, f64::max);
    ensure!(dc_left <= 1e-3, "DC residue {dc_left:e}");

    let down = e(resample(&alpha, fs, 128.0))?;
    ensure!(down.len() == alpha.len() / 2, "resampled length {}", down.len());
    let dec_db = db(amplitude(&down, 10.0, 128.0));
    ensure!(dec_db.abs() <= 1.0, "decimated 10 Hz gain {dec_db:.3} dB");

    let mut rng = Rng::new(3);
    let noise: Vec<f64> = (0..4096).map(|_| rng.normal()).collect();
    let filtered = e(bandpass(&noise, 1.0, 45.0, fs))?;
    let xcorr = |lag: i64| -> f64 {
        (0..noise.len() as i64)
            .filter_map(|i| {
                let j = i + lag;
                (j >= 0 && j < noise.len() as i64).then(|| noise[i as usize] * filtered[j as usize])
            })
            .sum()
    };
    let peak = (-64..=64).max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b))).unwrap();
    ensure!(peak == 0, "cross-correlation peak at lag {peak}");
    let took = timed(Duration::from_secs(10), start)?;
    Ok(format!(
        "notch -{notch_db:.1} dB, passband {pass_db:+.3} dB, DC {dc_left:.1e}, decimation {dec_db:+.3} dB, lag 0, {took:.2?}"
    ))
}

// 5. Augmentation contract.
fn augmentation_contract(fx: &Fixture) -> Outcome {
    let y = labels(&fx.samples, Target::Arousal);
    let split = stratified_split(&y, 0.2, &mut Rng::new(0)).map_err(|e| e.to_string())?;
    let subset = SplitIndex {
        train: split.train[..9].to_vec(),
        validation: vec![],
        test: split.test.clone(),
    };
    let partition = TrainingPartition::from_split(&fx.samples, &subset).map_err(|e| e.to_string())?;
    let out = augment(&partition, 42);
    let mut worst: f64 = 0.0;
    for k in 0..partition.len() {
        let copies: Vec<_> = out.iter().filter(|a| a.source == k).collect();
        ensure!(copies.len() == 30, "sample {k}: {} outputs", copies.len());
        for a in &copies {
            let ok = a.scale == 1.0 || (0.7..=0.8).contains(&a.scale) || (1.2..=1.3).contains(&a.scale);
            ensure!(ok, "scale {} outside the allowed ranges", a.scale);
        }
        let orig = &partition.samples()[k];
        for m in Modality::ALL {
            let (mut ps, mut pn) = (0.0, 0.0);
            for a in &copies {
                for (&x, &z) in orig.signals[m].iter().zip(&a.sample.signals[m]) {
                    if m == Modality::Eye && x == -1.0 {
                        continue;
                    }
                    let clean = x as f64 * a.scale;
                    ps += clean * clean;
                    pn += (z as f64 - clean).powi(2);
                }
            }
            let snr = 10.0 * (ps / pn).log10();
            ensure!((snr - 5.0).abs() <= 0.3, "sample {k} {m}: SNR {snr:.3} dB");
            worst = worst.max((snr - 5.0).abs());
        }
    }
    Ok(format!("{} samples x 30 outputs, max |SNR - 5| = {worst:.3} dB", partition.len()))
}

// 6. Split contract.
fn split_contract(fx: &Fixture) -> Outcome {
    let mut cases: Vec<Vec<usize>> = vec![labels(&fx.samples, Target::Arousal), labels(&fx.samples, Target::Valence)];
    cases.push([50, 30, 20].iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect());
    cases.push([7, 12, 41].iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect());
    for (i, y) in cases.iter().enumerate() {
        for seed in 0..5 {
            let a = stratified_split(y, 0.2, &mut Rng::new(seed)).map_err(|e| e.to_string())?;
            let b = stratified_split(y, 0.2, &mut Rng::new(seed)).map_err(|e| e.to_string())?;
            ensure!(a == b, "case {i} seed {seed}: not deterministic");
            let total = SplitIndex::class_counts(y, &(0..y.len()).collect::<Vec<_>>(), 3);
            let test = SplitIndex::class_counts(y, &a.test, 3);
            for c in 0..3 {
                let dev = (test[c] as f64 - 0.2 * total[c] as f64).abs();
                ensure!(dev <= 1.0, "case {i} class {c}: {} of {} in test", test[c], total[c]);
            }
        }
    }
    Ok(format!("{} label sets x 5 seeds", cases.len()))
}

// 7. End-to-end learning.
fn end_to_end(fx: &Fixture) -> Outcome {
    let config = fx.path("e2e.toml");
    std::fs::write(
        &config,
        "target = \"arousal\"\n[model]\nscale = 8\n[train]\nepochs = 50\npatience = 20\nruns = 1\nseed = 0\n",
    )
    .map_err(|e| e.to_string())?;
    ensure!(fx.samples.len() == 90, "{} processed samples", fx.samples.len());
    let start = Instant::now();
    let ckpt = fx.path("e2e.ckpt");
    let (code, out) = cli(&["train", "--data", p(&fx.processed), "--config", p(&config), "--out", p(&ckpt)]);
    ensure!(code == 0, "train exited {code}: {out}");
    let took = timed(Duration::from_secs(600), start)?;
    let report: Report = read_json(&ckpt.with_extension("json"))?;
    ensure!(report.runs == 1, "{} runs", report.runs);
    let (acc, f1) = (report.acc_mean, report.f1_mean);
    ensure!(acc >= 90.0 && f1 >= 85.0, "test accuracy {acc:.2}, macro-F1 {f1:.2}");
    Ok(format!(
        "accuracy {acc:.2}, macro-F1 {f1:.2}, best epoch {}, {took:.1?}",
        report.per_run[0].best_epoch
    ))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

// 8. Recipe mechanics.
fn recipe_mechanics(fx: &Fixture) -> Outcome {
    let tc = TrainConfig {
        max_lr: 0.004,
        ..TrainConfig::default()
    };
    let total = 2000;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let lr = |s| one_cycle_lr(s, total, &tc).map_err(|e| e.to_string());
    ensure!(rel(lr(0)?, 0.004 / 25.0) <= 1e-9, "step 0: {}", lr(0)?);
    ensure!(rel(lr(600)?, 0.004) <= 1e-9, "step 600: {}", lr(600)?);
    ensure!(rel(lr(total - 1)?, 0.004 / 1e4) <= 1e-9, "last step: {}", lr(total - 1)?);

    for (patience, rise) in [(20usize, 7usize), (5, 1), (3, 12)] {
        let mut stop = EarlyStopping::new(patience);
        let mut halted = None;
        for epoch in 1..=200 {
            let metric = epoch.min(rise) as f64;
            if stop.observe(epoch, metric) == Verdict::Stop {
                halted = Some(epoch);
                break;
            }
        }
        ensure!(halted == Some(rise + patience), "patience {patience}: halted at {halted:?}");
        ensure!(stop.best() == Some((rise, rise as f64)), "best {:?}", stop.best());
    }

    let config = fx.path("runs3.toml");
    std::fs::write(
        &config,
        "target = \"valence\"\n[model]\nscale = 32\n[train]\nepochs = 4\npatience = 3\naugment = false\nseed = 5\n",
    )
    .map_err(|e| e.to_string())?;
    let ckpt = fx.path("runs3.ckpt");
    let (code, out) = cli(&[
        "train", "--data", p(&fx.processed), "--config", p(&config), "--runs", "3", "--out", p(&ckpt),
    ]);
    ensure!(code == 0, "train --runs 3 exited {code}: {out}");
    let report: Report = read_json(&ckpt.with_extension("json"))?;
    ensure!(report.runs == 3 && report.per_run.len() == 3, "{} runs reported", report.runs);
    let f1: Vec<f64> = report.per_run.iter().map(|r| r.f1_macro).collect();
    let acc: Vec<f64> = report.per_run.iter().map(|r| r.accuracy).collect();
    ensure!(mean_std(&f1) == (report.f1_mean, report.f1_std), "F1 mean/std inconsistent");
    ensure!(mean_std(&acc) == (report.acc_mean, report.acc_std), "accuracy mean/std inconsistent");
    let f1_line = format!("F1        {:.2} ± {:.2}", report.f1_mean, report.f1_std);
    let acc_line = format!("accuracy  {:.2} ± {:.2}", report.acc_mean, report.acc_std);
    ensure!(out.contains(&f1_line) && out.contains(&acc_line), "table lines missing from:\n{out}");
    ensure!(is_table_cell(f1_line.trim_start_matches("F1").trim()), "bad format {f1_line}");
    Ok(format!("schedule anchors exact, patience halts exact, report `{}`", f1_line.split_whitespace().skip(1).collect::<Vec<_>>().join(" ")))
}

/// `xx.xx ± yy.yy`.
fn is_table_cell(s: &str) -> bool {
    let parts: Vec<&str> = s.split(" ± ").collect();
    parts.len() == 2
        && parts.iter().all(|p| {
            let mut it = p.split('.');
            let (int, frac) = (it.next().unwrap_or(""), it.next().unwrap_or(""));
            !int.is_empty() && int.chars().all(|c| c.is_ascii_digit()) && frac.len() == 2 && frac.chars().all(|c| c.is_ascii_digit())
        })
}

// 9. Persistence.
fn persistence(fx: &Fixture) -> Outcome {
    let ckpt_path = fx.path("e2e.ckpt");
    let bytes = std::fs::read(&ckpt_path).map_err(|e| format!("no checkpoint from criterion 7: {e}"))?;
    let ckpt = Checkpoint::from_bytes(&bytes).map_err(|e| e.to_string())?;
    let model = ckpt.to_model().map_err(|e| e.to_string())?;
    let again = Checkpoint::from_model(&model, ckpt.metadata.clone());
    ensure!(again.to_bytes().map_err(|e| e.to_string())? == bytes, "re-saved checkpoint differs");
    for (t, (name, live)) in ckpt.tensors.iter().zip(model.state()) {
        let same = t.data.iter().zip(live.to_vec()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure!(same && t.name == name, "{name} not bitwise identical");
    }

    let report: Report = read_json(&ckpt_path.with_extension("json"))?;
    let metrics_path = fx.path("eval.json");
    let (code, out) = cli(&[
        "eval", "--model", p(&ckpt_path), "--data", p(&fx.processed), "--json", p(&metrics_path),
    ]);
    ensure!(code == 0, "eval exited {code}: {out}");
    let m: Metrics = read_json(&metrics_path)?;
    let run = &report.per_run[0];
    ensure!(
        m.accuracy == run.accuracy && m.f1_macro == run.f1_macro && m.confusion == report.confusion[0],
        "eval {:.4}/{:.4} vs train {:.4}/{:.4}",
        m.accuracy,
        m.f1_macro,
        run.accuracy,
        run.f1_macro
    );
    ensure!(m == ckpt.metadata.metrics, "eval metrics differ from the checkpoint's");
    Ok(format!(
        "{} tensors bitwise, eval accuracy {:.2} / F1 {:.2} match train",
        ckpt.tensors.len(),
        m.accuracy,
        m.f1_macro
    ))
}

fn main() {
    let fx = fixture();
    let needs = |f: fn(&Fixture) -> Outcome| {
        let fx = &fx;
        move || match fx {
            Ok(fx) => f(fx),
            Err(e) => Err(format!("synthetic fixture unavailable: {e}")),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("quaternion exactness", Box::new(quaternion_exactness)),
        ("parameter-count law", Box::new(parameter_count_law)),
        ("gradient integrity", Box::new(gradient_integrity)),
        ("signal pipeline", Box::new(signal_pipeline)),
        ("augmentation contract", Box::new(needs(augmentation_contract))),
        ("split contract", Box::new(needs(split_contract))),
        ("end-to-end learning", Box::new(needs(end_to_end))),
        ("recipe mechanics", Box::new(needs(recipe_mechanics))),
        ("persistence", Box::new(needs(persistence))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
