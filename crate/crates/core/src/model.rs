//! HyperFuseNet: four real-valued encoder branches (EEG, ECG, GSR, eye)
//! whose latent vectors are concatenated and fused by a stack of PHM
//! layers before a final real-valued classifier.
//!
//! ```text
//! eeg ─ [FC BN ReLU] x3 ─┐
//! ecg ─ [FC BN ReLU] x3 ─┤
//! gsr ─ [FC BN ReLU] x2 ─┼─ concat ─ [PHM BN ReLU] x4 ─ Dropout ─ FC ─ logits
//! eye ─ [FC BN ReLU] x3 ─┘
//! ```
//!
//! Fusion widths halve at every PHM layer, starting from the concatenated
//! latent width (1792 → 896 → 448 → 224 → 112 at full size). A scale
//! divisor shrinks every width for desk-scale runs without changing the
//! wiring.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::layers::{join, BatchNorm1d, Dropout, Linear, Phase, PhmLinear, StateDict};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Eeg,
    Ecg,
    Gsr,
    Eye,
}

impl Modality {
    /// Concatenation order of the latent vectors.
    pub const ALL: [Modality; 4] = [Modality::Eeg, Modality::Ecg, Modality::Gsr, Modality::Eye];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Eeg => "eeg",
            Modality::Ecg => "ecg",
            Modality::Gsr => "gsr",
            Modality::Eye => "eye",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerModality<V> {
    pub eeg: V,
    pub ecg: V,
    pub gsr: V,
    pub eye: V,
}

impl<V> PerModality<V> {
    pub fn from_fn(mut f: impl FnMut(Modality) -> V) -> Self {
        Self {
            eeg: f(Modality::Eeg),
            ecg: f(Modality::Ecg),
            gsr: f(Modality::Gsr),
            eye: f(Modality::Eye),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(Modality) -> std::result::Result<V, E>) -> std::result::Result<Self, E> {
        Ok(Self {
            eeg: f(Modality::Eeg)?,
            ecg: f(Modality::Ecg)?,
            gsr: f(Modality::Gsr)?,
            eye: f(Modality::Eye)?,
        })
    }

    pub fn map<U>(&self, mut f: impl FnMut(Modality, &V) -> U) -> PerModality<U> {
        PerModality::from_fn(|m| f(m, &self[m]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Modality, &V)> {
        Modality::ALL.into_iter().map(move |m| (m, &self[m]))
    }
}

impl<V> Index<Modality> for PerModality<V> {
    type Output = V;

    fn index(&self, m: Modality) -> &V {
        match m {
            Modality::Eeg => &self.eeg,
            Modality::Ecg => &self.ecg,
            Modality::Gsr => &self.gsr,
            Modality::Eye => &self.eye,
        }
    }
}

impl<V> IndexMut<Modality> for PerModality<V> {
    fn index_mut(&mut self, m: Modality) -> &mut V {
        match m {
            Modality::Eeg => &mut self.eeg,
            Modality::Ecg => &mut self.ecg,
            Modality::Gsr => &mut self.gsr,
            Modality::Eye => &mut self.eye,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Hypercomplex dimension of the fusion layers.
    pub n: usize,
    /// Unscaled branch widths.
    pub widths: PerModality<usize>,
    /// Number of FC/BN/ReLU blocks per branch.
    pub depths: PerModality<usize>,
    /// Flattened input length per modality (channels x samples).
    pub input_lens: PerModality<usize>,
    pub fusion_layers: usize,
    pub dropout: f64,
    pub classes: usize,
    /// Divides every width.
    pub scale: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n: 4,
            widths: PerModality {
                eeg: 1024,
                ecg: 512,
                gsr: 128,
                eye: 128,
            },
            depths: PerModality {
                eeg: 3,
                ecg: 3,
                gsr: 2,
                eye: 3,
            },
            input_lens: PerModality {
                eeg: 10 * 1280,
                ecg: 3 * 1280,
                gsr: 1280,
                eye: 4 * 600,
            },
            fusion_layers: 4,
            dropout: crate::layers::DEFAULT_DROPOUT,
            classes: 3,
            scale: 1,
        }
    }
}

impl ModelConfig {
    pub fn with_scale(mut self, scale: usize) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.scale == 0 {
            return bad("scale divisor must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.fusion_layers == 0 {
            return bad("fusion head needs at least one PHM layer".into());
        }
        Dropout::new(self.dropout)?;
        for (m, &w) in self.widths.iter() {
            if w % self.scale != 0 || w / self.scale == 0 {
                return bad(format!("{m} width {w} is not a positive multiple of scale {}", self.scale));
            }
            if self.depths[m] == 0 {
                return bad(format!("{m} branch depth must be at least 1"));
            }
            if self.input_lens[m] == 0 {
                return bad(format!("{m} input length must be positive"));
            }
        }
        let latent = self.latent_width();
        if !latent.is_multiple_of(self.n) {
            return Err(Error::Divisibility {
                what: "concatenated latent width".into(),
                value: latent,
                divisor: self.n,
            });
        }
        Ok(())
    }

    pub fn branch_width(&self, m: Modality) -> usize {
        self.widths[m] / self.scale.max(1)
    }

    /// Width of the concatenated latent vector.
    pub fn latent_width(&self) -> usize {
        Modality::ALL.iter().map(|&m| self.branch_width(m)).sum()
    }

    /// Input width followed by each PHM layer's output width. Each layer
    /// halves its input; a half that is not a multiple of `n` is rounded up
    /// to the next one (only reachable with a scale divisor, e.g. 28 → 16
    /// at s = 8).
    pub fn fusion_widths(&self) -> Vec<usize> {
        let n = self.n.max(1);
        let mut w = vec![self.latent_width()];
        for _ in 0..self.fusion_layers {
            let half = w.last().unwrap() / 2;
            w.push(half.div_ceil(n).max(1) * n);
        }
        w
    }
}

/// One input tensor `[batch, input_len]` per modality.
#[derive(Debug, Clone)]
pub struct Batch<T: Scalar> {
    inputs: PerModality<Tensor<T>>,
}

impl<T: Scalar> Batch<T> {
    pub fn new(inputs: PerModality<Tensor<T>>) -> Self {
        Self { inputs }
    }

    /// Requires every modality exactly once.
    pub fn from_parts(parts: impl IntoIterator<Item = (Modality, Tensor<T>)>) -> Result<Self> {
        let mut slots: PerModality<Option<Tensor<T>>> = PerModality::default();
        for (m, t) in parts {
            if slots[m].replace(t).is_some() {
                return Err(Error::InvalidConfig(format!("modality {m} supplied twice")));
            }
        }
        let inputs = PerModality::try_from_fn(|m| slots[m].take().ok_or(Error::MissingModality(m)))?;
        Ok(Self { inputs })
    }

    pub fn get(&self, m: Modality) -> &Tensor<T> {
        &self.inputs[m]
    }

    pub fn rows(&self) -> usize {
        self.inputs.eeg.shape().first().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
struct Block<T: Scalar, L> {
    linear: L,
    norm: BatchNorm1d<T>,
}

#[derive(Debug, Clone)]
pub struct HyperFuseNet<T: Scalar = f32> {
    config: ModelConfig,
    branches: PerModality<Vec<Block<T, Linear<T>>>>,
    fusion: Vec<Block<T, PhmLinear<T>>>,
    dropout: Dropout,
    head: Linear<T>,
}

impl<T: Scalar> HyperFuseNet<T> {
    pub fn build(config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let branches = PerModality::from_fn(|m| {
            let w = config.branch_width(m);
            (0..config.depths[m])
                .map(|i| {
                    let d_in = if i == 0 { config.input_lens[m] } else { w };
                    Block {
                        linear: Linear::new(d_in, w, rng),
                        norm: BatchNorm1d::new(w),
                    }
                })
                .collect()
        });
        let widths = config.fusion_widths();
        let fusion = widths
            .windows(2)
            .map(|w| {
                Ok(Block {
                    linear: PhmLinear::new(config.n, w[0], w[1], rng)?,
                    norm: BatchNorm1d::new(w[1]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let head = Linear::new(*widths.last().unwrap(), config.classes, rng);
        Ok(Self {
            config: config.clone(),
            branches,
            fusion,
            dropout: Dropout::new(config.dropout)?,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn fusion_layers(&self) -> impl Iterator<Item = &PhmLinear<T>> {
        self.fusion.iter().map(|b| &b.linear)
    }

    pub fn head(&self) -> &Linear<T> {
        &self.head
    }

    /// Parameter groups: one per branch, one per PHM block, and the head.
    pub fn parameter_groups(&self) -> Vec<(String, Vec<(String, Tensor<T>)>)> {
        let mut groups = Vec::new();
        for m in Modality::ALL {
            let mut out = Vec::new();
            self.collect_branch(m, &mut out);
            out.retain(|(_, t)| t.requires_grad());
            groups.push((format!("branch.{m}"), out));
        }
        for (i, block) in self.fusion.iter().enumerate() {
            let prefix = format!("fusion.{i}");
            let mut out = Vec::new();
            block.linear.collect_state(&join(&prefix, "phm"), &mut out);
            block.norm.collect_state(&join(&prefix, "bn"), &mut out);
            out.retain(|(_, t)| t.requires_grad());
            groups.push((prefix, out));
        }
        groups.push(("head".into(), self.head.parameters()));
        groups
    }

    fn collect_branch(&self, m: Modality, out: &mut Vec<(String, Tensor<T>)>) {
        for (i, block) in self.branches[m].iter().enumerate() {
            let prefix = format!("branch.{m}.{i}");
            block.linear.collect_state(&join(&prefix, "fc"), out);
            block.norm.collect_state(&join(&prefix, "bn"), out);
        }
    }

    pub fn forward(&self, batch: &Batch<T>, phase: &mut Phase<'_>) -> Result<Tensor<T>> {
        let rows = batch.rows();
        let mut latents = Vec::with_capacity(4);
        for m in Modality::ALL {
            let x = batch.get(m);
            let expected = [rows, self.config.input_lens[m]];
            if x.shape() != expected {
                return Err(Error::LengthMismatch(format!(
                    "{m} input has shape {:?}, model expects {:?}",
                    x.shape(),
                    expected
                )));
            }
            let mut h = x.clone();
            for block in &self.branches[m] {
                h = block.norm.forward(&block.linear.forward(&h)?, phase)?.relu();
            }
            latents.push(h);
        }
        let mut h = Tensor::concat(&latents, 1)?;
        for block in &self.fusion {
            h = block.norm.forward(&block.linear.forward(&h)?, phase)?.relu();
        }
        let h = self.dropout.forward(&h, phase)?;
        self.head.forward(&h)
    }

    /// Arg-max class per row in evaluation mode.
    pub fn predict(&self, batch: &Batch<T>) -> Result<Vec<usize>> {
        let logits = self.forward(batch, &mut Phase::Eval)?.to_vec();
        Ok(argmax_rows(&logits, self.config.classes))
    }
}

/// Index of the largest entry per row; ties go to the lowest index.
pub fn argmax_rows<T: Scalar>(values: &[T], classes: usize) -> Vec<usize> {
    values
        .chunks(classes)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

impl<T: Scalar> StateDict<T> for HyperFuseNet<T> {
    fn collect_state(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        let mut local = Vec::new();
        for m in Modality::ALL {
            self.collect_branch(m, &mut local);
        }
        for (i, block) in self.fusion.iter().enumerate() {
            block.linear.collect_state(&format!("fusion.{i}.phm"), &mut local);
            block.norm.collect_state(&format!("fusion.{i}.bn"), &mut local);
        }
        self.head.collect_state("head", &mut local);
        out.extend(local.into_iter().map(|(n, t)| (join(prefix, &n), t)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::softmax;

    fn random_batch<T: Scalar>(config: &ModelConfig, rows: usize, rng: &mut Rng) -> Batch<T> {
        Batch::new(PerModality::from_fn(|m| {
            let n = rows * config.input_lens[m];
            let data: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            Tensor::from_f64(&[rows, config.input_lens[m]], &data).unwrap()
        }))
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            input_lens: PerModality {
                eeg: 40,
                ecg: 12,
                gsr: 8,
                eye: 16,
            },
            ..ModelConfig::default().with_scale(32)
        }
    }

    #[test]
    fn default_widths() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.latent_width(), 1792);
        assert_eq!(c.fusion_widths(), vec![1792, 896, 448, 224, 112]);
        let s8 = ModelConfig::default().with_scale(8);
        s8.validate().unwrap();
        assert_eq!(s8.fusion_widths(), vec![224, 112, 56, 28, 16]);
        assert!(s8.fusion_widths().iter().all(|w| w % 4 == 0));
    }

    #[test]
    fn invalid_configs() {
        assert!(ModelConfig::default().with_scale(3).validate().is_err());
        assert!(ModelConfig::default().with_scale(0).validate().is_err());
        let c = ModelConfig {
            n: 3,
            ..ModelConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Divisibility { .. })));
    }

    #[test]
    fn default_fusion_parameter_budget() {
        let c = ModelConfig::default();
        let widths = c.fusion_widths();
        let mut phm = 0;
        let mut real = 0;
        for w in widths.windows(2).take(4) {
            phm += PhmLinear::<f32>::weight_parameter_count(4, w[0], w[1]);
            real += w[0] * w[1];
        }
        assert_eq!(phm, 533_376);
        assert_eq!(real, 2_132_480);
        let ratio = phm as f64 / real as f64;
        assert!(ratio >= 0.25 && ratio <= 0.25 + 4.0 * 64.0 / real as f64);
        assert_eq!(format!("{ratio:.4}"), "0.2501");
    }

    #[test]
    fn groups_and_wiring() {
        let config = small_config();
        let model = HyperFuseNet::<f32>::build(&config, &mut Rng::new(0)).unwrap();
        let groups = model.parameter_groups();
        assert_eq!(groups.len(), 4 + 4 + 1);
        assert_eq!(model.fusion_layers().count(), 4);
        let fc_count = |m: Modality| {
            model
                .state()
                .iter()
                .filter(|(n, _)| n.starts_with(&format!("branch.{m}.")) && n.ends_with("fc.weight"))
                .count()
        };
        assert_eq!(fc_count(Modality::Gsr), 2);
        assert_eq!(fc_count(Modality::Eeg), 3);
        assert_eq!(model.head().d_out(), 3);
        assert_eq!(config.fusion_widths(), vec![56, 28, 16, 8, 4]);
        assert_eq!(model.head().d_in(), 4);
    }

    #[test]
    fn scale_changes_widths_only() {
        let a = HyperFuseNet::<f32>::build(&small_config(), &mut Rng::new(0)).unwrap();
        let b_config = ModelConfig {
            scale: 16,
            ..small_config()
        };
        let b = HyperFuseNet::<f32>::build(&b_config, &mut Rng::new(0)).unwrap();
        let names = |m: &HyperFuseNet<f32>| m.state().into_iter().map(|(n, _)| n).collect::<Vec<_>>();
        assert_eq!(names(&a), names(&b));
    }

    #[test]
    fn forward_shapes_and_determinism() {
        let config = small_config();
        let mut rng = Rng::new(1);
        let model = HyperFuseNet::<f32>::build(&config, &mut rng).unwrap();
        let batch = random_batch(&config, 2, &mut rng);
        let a = model.forward(&batch, &mut Phase::Eval).unwrap();
        let b = model.forward(&batch, &mut Phase::Eval).unwrap();
        assert_eq!(a.shape(), &[2, 3]);
        assert!(a.to_vec().iter().zip(b.to_vec()).all(|(x, y)| x.to_bits() == y.to_bits()));
        for row in softmax(&a).unwrap() {
            assert!((row.iter().sum::<f32>() - 1.0).abs() <= 1e-6);
        }
        assert_eq!(model.predict(&batch).unwrap().len(), 2);
    }

    #[test]
    fn full_size_forward_shape() {
        let config = ModelConfig::default();
        let mut rng = Rng::new(2);
        let model = HyperFuseNet::<f32>::build(&config, &mut rng).unwrap();
        let batch = random_batch(&config, 2, &mut rng);
        assert_eq!(model.forward(&batch, &mut Phase::Eval).unwrap().shape(), &[2, 3]);
    }

    #[test]
    fn input_errors() {
        let config = small_config();
        let mut rng = Rng::new(3);
        let model = HyperFuseNet::<f32>::build(&config, &mut rng).unwrap();
        let good = random_batch::<f32>(&config, 2, &mut rng);
        let parts = Modality::ALL
            .iter()
            .filter(|&&m| m != Modality::Gsr)
            .map(|&m| (m, good.get(m).clone()));
        assert!(matches!(Batch::from_parts(parts), Err(Error::MissingModality(Modality::Gsr))));

        let wrong = Batch::from_parts(Modality::ALL.iter().map(|&m| {
            let t = if m == Modality::Eye { Tensor::zeros(&[2, 5]) } else { good.get(m).clone() };
            (m, t)
        }))
        .unwrap();
        assert!(matches!(model.forward(&wrong, &mut Phase::Eval), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn argmax_tie_rule() {
        assert_eq!(argmax_rows(&[0.1f32, 0.9, 0.3], 3), vec![1]);
        assert_eq!(argmax_rows(&[1.0f32, 1.0, 0.0], 3), vec![0]);
        assert_eq!(argmax_rows(&[0.0f32, 1.0, 2.0, 5.0, 1.0, 1.0], 3), vec![2, 0]);
    }

    #[test]
    fn every_parameter_receives_gradient() {
        let config = small_config();
        let mut rng = Rng::new(4);
        let model = HyperFuseNet::<f64>::build(&config, &mut rng).unwrap();
        let batch = random_batch(&config, 6, &mut rng);
        let targets: Vec<usize> = (0..6).map(|_| rng.below(3)).collect();
        let mut train_rng = Rng::new(5);
        let logits = model.forward(&batch, &mut Phase::Train(&mut train_rng)).unwrap();
        logits.cross_entropy(&targets).unwrap().backward().unwrap();
        for (name, t) in model.parameters() {
            let g = t.grad().unwrap_or_else(|| panic!("{name} has no gradient"));
            assert!(g.iter().any(|&v| v != 0.0), "{name} gradient is all zero");
        }
    }
}
