use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Adam with bias-corrected moments:
/// `p -= lr / (1 - b1^t) * m / (sqrt(v / (1 - b2^t)) + eps)`.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &[Tensor<T>], betas: (f64, f64), eps: f64) -> Self {
        Self {
            beta1: betas.0,
            beta2: betas.1,
            eps,
            t: 0,
            m: params.iter().map(|p| vec![T::zero(); p.numel()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.numel()]).collect(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// Applies one update from the gradients currently stored on `params`.
    /// Parameters without a gradient are left alone.
    pub fn step(&mut self, params: &[Tensor<T>], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::shape("adam", &[self.m.len()], &[params.len()]));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let step_size = T::from_f64_lossy(lr / bc1);
        let inv_sqrt_bc2 = T::from_f64_lossy(1.0 / bc2.sqrt());
        let (b1, b2) = (T::from_f64_lossy(self.beta1), T::from_f64_lossy(self.beta2));
        let (c1, c2) = (T::one() - b1, T::one() - b2);
        let eps = T::from_f64_lossy(self.eps);
        for ((p, m), v) in params.iter().zip(&mut self.m).zip(&mut self.v) {
            if p.numel() != m.len() {
                return Err(Error::shape("adam", &[m.len()], p.shape()));
            }
            let Some(g) = p.grad() else { continue };
            p.update_data(|w| {
                for i in 0..w.len() {
                    m[i] = b1 * m[i] + c1 * g[i];
                    v[i] = b2 * v[i] + c2 * g[i] * g[i];
                    w[i] = w[i] - step_size * m[i] / (v[i].sqrt() * inv_sqrt_bc2 + eps);
                }
            });
        }
        Ok(())
    }
}
