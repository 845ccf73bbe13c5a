use super::{join, Phase, StateDict};
use crate::autodiff::{Scalar, Tensor};
use crate::error::Result;

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// Batch normalization over the rows of a `[batch, d]` matrix.
///
/// Running statistics follow `r <- (1 - momentum) r + momentum * s`, using
/// the unbiased batch variance for `running_var`.
#[derive(Debug, Clone)]
pub struct BatchNorm1d<T: Scalar> {
    gamma: Tensor<T>,
    beta: Tensor<T>,
    running_mean: Tensor<T>,
    running_var: Tensor<T>,
    eps: T,
    momentum: T,
}

impl<T: Scalar> BatchNorm1d<T> {
    pub fn new(d: usize) -> Self {
        Self::with_hyper(d, DEFAULT_EPS, DEFAULT_MOMENTUM)
    }

    pub fn with_hyper(d: usize, eps: f64, momentum: f64) -> Self {
        Self {
            gamma: Tensor::parameter(&[d], vec![T::one(); d]).unwrap(),
            beta: Tensor::parameter(&[d], vec![T::zero(); d]).unwrap(),
            running_mean: Tensor::zeros(&[d]),
            running_var: Tensor::full(&[d], T::one()),
            eps: T::from_f64_lossy(eps),
            momentum: T::from_f64_lossy(momentum),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.numel()
    }

    pub fn gamma(&self) -> &Tensor<T> {
        &self.gamma
    }

    pub fn beta(&self) -> &Tensor<T> {
        &self.beta
    }

    pub fn running_mean(&self) -> &Tensor<T> {
        &self.running_mean
    }

    pub fn running_var(&self) -> &Tensor<T> {
        &self.running_var
    }

    pub fn forward(&self, x: &Tensor<T>, phase: &Phase<'_>) -> Result<Tensor<T>> {
        if !phase.is_training() {
            let mean = self.running_mean.to_vec();
            let var = self.running_var.to_vec();
            let (y, _) = x.batch_norm(&self.gamma, &self.beta, Some((&mean, &var)), self.eps)?;
            return Ok(y);
        }
        let (y, stats) = x.batch_norm(&self.gamma, &self.beta, None, self.eps)?;
        let stats = stats.expect("training mode returns batch statistics");
        let rows = T::from_usize(x.shape()[0]).unwrap();
        let unbias = rows / (rows - T::one());
        let keep = T::one() - self.momentum;
        let m = self.momentum;
        self.running_mean.update_data(|rm| {
            rm.iter_mut().zip(&stats.mean).for_each(|(r, &b)| *r = keep * *r + m * b);
        });
        self.running_var.update_data(|rv| {
            rv.iter_mut()
                .zip(&stats.var)
                .for_each(|(r, &b)| *r = keep * *r + m * b * unbias);
        });
        Ok(y)
    }
}

impl<T: Scalar> StateDict<T> for BatchNorm1d<T> {
    fn collect_state(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((join(prefix, "gamma"), self.gamma.clone()));
        out.push((join(prefix, "beta"), self.beta.clone()));
        out.push((join(prefix, "running_mean"), self.running_mean.clone()));
        out.push((join(prefix, "running_var"), self.running_var.clone()));
    }
}
