use super::{join, uniform_init, StateDict};
use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Real-valued fully-connected layer, `y = x W^T + b`.
#[derive(Debug, Clone)]
pub struct Linear<T: Scalar> {
    weight: Tensor<T>,
    bias: Tensor<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(d_in: usize, d_out: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (d_in + d_out) as f64).sqrt();
        Self {
            weight: uniform_init(&[d_out, d_in], limit, rng),
            bias: Tensor::parameter(&[d_out], vec![T::zero(); d_out]).unwrap(),
        }
    }

    /// `weight` is `[d_out, d_in]`, `bias` is `[d_out]`.
    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        match (weight.shape(), bias.shape()) {
            ([o, _], [b]) if o == b => Ok(Self { weight, bias }),
            _ => Err(Error::shape("linear", weight.shape(), bias.shape())),
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn d_out(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn weight(&self) -> &Tensor<T> {
        &self.weight
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.matmul_t(&self.weight)?.add_row(&self.bias)
    }
}

impl<T: Scalar> StateDict<T> for Linear<T> {
    fn collect_state(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((join(prefix, "weight"), self.weight.clone()));
        out.push((join(prefix, "bias"), self.bias.clone()));
    }
}
