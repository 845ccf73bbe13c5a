//! Parameterized hypercomplex multiplication layer.
//!
//! The `d_out x d_in` weight is never stored. It is assembled on every
//! forward pass as a sum of `n` Kronecker products
//!
//! ```text
//! W = A_1 (x) F_1 + ... + A_n (x) F_n
//! ```
//!
//! where the `n x n` matrices `A_i` learn the multiplication rule of the
//! algebra and the `(d_out/n) x (d_in/n)` filters `F_i` carry the features.
//! Storage is `n^3 + d_out * d_in / n` weight scalars instead of
//! `d_out * d_in`. With `A` fixed to [`algebra_matrices(4)`] and `1x1`
//! filters the weight is exactly the quaternion left-multiplication matrix.
//!
//! [`algebra_matrices(4)`]: crate::hyperalg::algebra_matrices

use super::{join, uniform_init, StateDict};
use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::hyperalg::algebra_matrices;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct PhmLinear<T: Scalar> {
    n: usize,
    d_in: usize,
    d_out: usize,
    algebra: Vec<Tensor<T>>,
    filters: Vec<Tensor<T>>,
    bias: Tensor<T>,
}

fn check_divisible(n: usize, d_in: usize, d_out: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("PHM dimension n must be at least 1".into()));
    }
    for (what, value) in [("d_in", d_in), ("d_out", d_out)] {
        if value % n != 0 {
            return Err(Error::Divisibility {
                what: what.into(),
                value,
                divisor: n,
            });
        }
    }
    Ok(())
}

impl<T: Scalar> PhmLinear<T> {
    /// Fresh layer. `A_i` start at the fixed algebra for `n` in {1, 2, 4}
    /// and at random entries from {-1, 0, 1} otherwise; filters use a
    /// uniform fan-based init; the bias starts at zero.
    pub fn new(n: usize, d_in: usize, d_out: usize, rng: &mut Rng) -> Result<Self> {
        check_divisible(n, d_in, d_out)?;
        let algebra = match algebra_matrices(n) {
            Ok(tables) => tables
                .into_iter()
                .map(|m| Tensor::parameter(&[n, n], m.entries().iter().map(|&v| T::from_f64_lossy(v)).collect()))
                .collect::<Result<Vec<_>>>()?,
            Err(_) => (0..n)
                .map(|_| {
                    let data = (0..n * n).map(|_| T::from_f64_lossy(rng.below(3) as f64 - 1.0)).collect();
                    Tensor::parameter(&[n, n], data)
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let (fo, fi) = (d_out / n, d_in / n);
        let limit = (6.0 / (fi + fo) as f64).sqrt();
        let filters = (0..n).map(|_| uniform_init(&[fo, fi], limit, rng)).collect();
        Ok(Self {
            n,
            d_in,
            d_out,
            algebra,
            filters,
            bias: Tensor::parameter(&[d_out], vec![T::zero(); d_out])?,
        })
    }

    /// Assembles a layer from explicit tensors; each keeps its own
    /// `requires_grad` flag, so a constant `A_i` stays frozen.
    pub fn from_parts(algebra: Vec<Tensor<T>>, filters: Vec<Tensor<T>>, bias: Tensor<T>) -> Result<Self> {
        let n = algebra.len();
        if n == 0 || filters.len() != n {
            return Err(Error::InvalidConfig(format!(
                "PHM needs n algebra matrices and n filters, got {} and {}",
                n,
                filters.len()
            )));
        }
        for a in &algebra {
            if a.shape() != [n, n] {
                return Err(Error::shape("phm algebra", a.shape(), &[n, n]));
            }
        }
        let fshape = filters[0].shape().to_vec();
        if fshape.len() != 2 || filters.iter().any(|f| f.shape() != fshape.as_slice()) {
            return Err(Error::shape("phm filters", &fshape, filters.last().unwrap().shape()));
        }
        let (d_out, d_in) = (fshape[0] * n, fshape[1] * n);
        if bias.shape() != [d_out] {
            return Err(Error::shape("phm bias", bias.shape(), &[d_out]));
        }
        Ok(Self {
            n,
            d_in,
            d_out,
            algebra,
            filters,
            bias,
        })
    }

    /// Same layer with the algebra matrices detached from training.
    pub fn with_frozen_algebra(mut self) -> Self {
        self.algebra = self.algebra.iter().map(|a| a.detached(false)).collect();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn algebra(&self) -> &[Tensor<T>] {
        &self.algebra
    }

    pub fn filters(&self) -> &[Tensor<T>] {
        &self.filters
    }

    pub fn bias(&self) -> &Tensor<T> {
        &self.bias
    }

    /// Weight scalars a PHM layer of this shape stores: `n^3 + d_in d_out / n`.
    pub fn weight_parameter_count(n: usize, d_in: usize, d_out: usize) -> usize {
        n * n * n + d_in * d_out / n
    }

    /// `W = sum_i A_i (x) F_i`, recorded in the autodiff graph.
    pub fn weight(&self) -> Result<Tensor<T>> {
        let mut terms = self.algebra.iter().zip(&self.filters).map(|(a, f)| a.kron(f));
        let mut w = terms.next().expect("n >= 1")?;
        for term in terms {
            w = w.add(&term?)?;
        }
        Ok(w)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match x.shape() {
            [_, d] if *d == self.d_in => {}
            _ => return Err(Error::shape("phm forward", x.shape(), &[0, self.d_in])),
        }
        x.matmul_t(&self.weight()?)?.add_row(&self.bias)
    }
}

impl<T: Scalar> StateDict<T> for PhmLinear<T> {
    fn collect_state(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        for (i, a) in self.algebra.iter().enumerate() {
            out.push((join(prefix, &format!("algebra.{i}")), a.clone()));
        }
        for (i, f) in self.filters.iter().enumerate() {
            out.push((join(prefix, &format!("filter.{i}")), f.clone()));
        }
        out.push((join(prefix, "bias"), self.bias.clone()));
    }
}
