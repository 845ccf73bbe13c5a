//! Differentiable layers built on [`crate::autodiff`].

mod batchnorm;
mod dropout;
mod linear;
mod loss;
mod phm;

pub use batchnorm::{BatchNorm1d, DEFAULT_EPS, DEFAULT_MOMENTUM};
pub use dropout::{Dropout, DEFAULT_RATE as DEFAULT_DROPOUT};
pub use linear::Linear;
pub use loss::{cross_entropy, softmax};
pub use phm::PhmLinear;

use crate::autodiff::{Scalar, Tensor};
use crate::rng::Rng;

/// Whether a forward pass trains (batch statistics, active dropout) or
/// evaluates.
pub enum Phase<'a> {
    Train(&'a mut Rng),
    Eval,
}

impl Phase<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Phase::Train(_))
    }
}

/// Every tensor a layer stores: trainable parameters and buffers such as
/// batch-norm running statistics.
pub trait StateDict<T: Scalar> {
    fn collect_state(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>);

    fn state(&self) -> Vec<(String, Tensor<T>)> {
        let mut out = Vec::new();
        self.collect_state("", &mut out);
        out
    }

    fn parameters(&self) -> Vec<(String, Tensor<T>)> {
        let mut all = self.state();
        all.retain(|(_, t)| t.requires_grad());
        all
    }

    /// Number of trainable scalars.
    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|(_, t)| t.numel()).sum()
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Glorot-style uniform draw on `[-limit, limit]`.
pub(crate) fn uniform_init<T: Scalar>(shape: &[usize], limit: f64, rng: &mut Rng) -> Tensor<T> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::from_f64_lossy(rng.uniform_range(-limit, limit))).collect();
    Tensor::parameter(shape, data).expect("shape matches data")
}
