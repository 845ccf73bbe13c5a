use super::Phase;
use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};

pub const DEFAULT_RATE: f64 = 0.25;

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` during
/// training; evaluation is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    rate: f64,
}

impl Default for Dropout {
    fn default() -> Self {
        Self { rate: DEFAULT_RATE }
    }
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidConfig(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn forward<T: Scalar>(&self, x: &Tensor<T>, phase: &mut Phase<'_>) -> Result<Tensor<T>> {
        let rng = match phase {
            Phase::Train(rng) if self.rate > 0.0 => rng,
            _ => return Ok(x.clone()),
        };
        let keep = T::from_f64_lossy(1.0 / (1.0 - self.rate));
        let mask = (0..x.numel())
            .map(|_| if rng.bernoulli(self.rate) { T::zero() } else { keep })
            .collect();
        x.mul(&Tensor::new(x.shape(), mask)?)
    }
}
