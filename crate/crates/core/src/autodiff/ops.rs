use super::{Node, Op, Scalar, Tensor};
use crate::error::{Error, Result};

/// Batch statistics produced by a training-mode batch norm.
#[derive(Debug, Clone)]
pub struct BatchNormStats<T> {
    pub mean: Vec<T>,
    /// Biased (population) variance of the batch.
    pub var: Vec<T>,
}

fn zip_map<T: Scalar>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn matrix_dims(t: &Tensor<impl Scalar>, op: &'static str) -> Result<(usize, usize)> {
    match *t.shape() {
        [r, c] => Ok((r, c)),
        _ => Err(Error::shape(op, t.shape(), &[0, 0])),
    }
}

impl<T: Scalar> Tensor<T> {
    fn same_shape(&self, rhs: &Tensor<T>, op: &'static str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(op, self.shape(), rhs.shape()));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.same_shape(rhs, "add")?;
        let out = zip_map(&self.data(), &rhs.data(), |a, b| a + b);
        Ok(Tensor::from_op(self.shape().to_vec(), out, Op::Add, vec![self.clone(), rhs.clone()]))
    }

    pub fn sub(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.same_shape(rhs, "sub")?;
        let out = zip_map(&self.data(), &rhs.data(), |a, b| a - b);
        Ok(Tensor::from_op(self.shape().to_vec(), out, Op::Sub, vec![self.clone(), rhs.clone()]))
    }

    /// Elementwise product.
    pub fn mul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.same_shape(rhs, "mul")?;
        let out = zip_map(&self.data(), &rhs.data(), |a, b| a * b);
        Ok(Tensor::from_op(self.shape().to_vec(), out, Op::Mul, vec![self.clone(), rhs.clone()]))
    }

    pub fn mul_scalar(&self, s: T) -> Tensor<T> {
        let out = self.data().iter().map(|&v| v * s).collect();
        Tensor::from_op(self.shape().to_vec(), out, Op::MulScalar(s), vec![self.clone()])
    }

    /// `x + bias` with `bias` of shape `[d]` broadcast over the rows of a
    /// `[rows, d]` matrix.
    pub fn add_row(&self, bias: &Tensor<T>) -> Result<Tensor<T>> {
        let (_, d) = matrix_dims(self, "add_row")?;
        if bias.shape() != [d] {
            return Err(Error::shape("add_row", self.shape(), bias.shape()));
        }
        let b = bias.data();
        let mut out = self.to_vec();
        for row in out.chunks_mut(d) {
            row.iter_mut().zip(b.iter()).for_each(|(o, &bv)| *o += bv);
        }
        drop(b);
        Ok(Tensor::from_op(self.shape().to_vec(), out, Op::AddRow, vec![self.clone(), bias.clone()]))
    }

    pub fn relu(&self) -> Tensor<T> {
        let out = self
            .data()
            .iter()
            .map(|&v| if v > T::zero() { v } else { T::zero() })
            .collect();
        Tensor::from_op(self.shape().to_vec(), out, Op::Relu, vec![self.clone()])
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.matmul_impl(rhs, false)
    }

    /// `self * rhs^T`, without materializing the transpose.
    pub fn matmul_t(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        self.matmul_impl(rhs, true)
    }

    fn matmul_impl(&self, rhs: &Tensor<T>, trans_b: bool) -> Result<Tensor<T>> {
        let op = if trans_b { "matmul_t" } else { "matmul" };
        let (m, k) = matrix_dims(self, op)?;
        let (r0, r1) = matrix_dims(rhs, op)?;
        let (k2, n) = if trans_b { (r1, r0) } else { (r0, r1) };
        if k != k2 {
            return Err(Error::shape(op, self.shape(), rhs.shape()));
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(m, k, n, &self.data(), false, &rhs.data(), trans_b, &mut out, false);
        Ok(Tensor::from_op(vec![m, n], out, Op::MatMul { trans_b }, vec![self.clone(), rhs.clone()]))
    }

    /// Concatenates along `axis`; all other extents must agree.
    pub fn concat(tensors: &[Tensor<T>], axis: usize) -> Result<Tensor<T>> {
        let first = tensors.first().ok_or(Error::EmptyInput("concat"))?;
        let rank = first.ndim();
        if axis >= rank {
            return Err(Error::shape("concat", first.shape(), &[axis]));
        }
        for t in &tensors[1..] {
            let ok = t.ndim() == rank
                && t.shape().iter().zip(first.shape()).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !ok {
                return Err(Error::shape("concat", first.shape(), t.shape()));
            }
        }
        let outer: usize = first.shape()[..axis].iter().product();
        let inner: usize = first.shape()[axis + 1..].iter().product();
        let mut shape = first.shape().to_vec();
        shape[axis] = tensors.iter().map(|t| t.shape()[axis]).sum();

        let guards: Vec<_> = tensors.iter().map(|t| t.data()).collect();
        let chunk: Vec<usize> = tensors.iter().map(|t| t.shape()[axis] * inner).collect();
        let mut out = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for (g, &c) in guards.iter().zip(&chunk) {
                out.extend_from_slice(&g[o * c..(o + 1) * c]);
            }
        }
        drop(guards);
        Ok(Tensor::from_op(shape, out, Op::Concat { axis }, tensors.to_vec()))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor<T>> {
        if shape.iter().product::<usize>() != self.numel() {
            return Err(Error::shape("reshape", self.shape(), shape));
        }
        Ok(Tensor::from_op(shape.to_vec(), self.to_vec(), Op::Reshape, vec![self.clone()]))
    }

    /// Collapses all but the leading axis: `[b, ...] -> [b, prod(...)]`.
    pub fn flatten(&self) -> Result<Tensor<T>> {
        let b = *self.shape().first().ok_or(Error::EmptyInput("flatten"))?;
        let rest = if b == 0 { 0 } else { self.numel() / b };
        self.reshape(&[b, rest])
    }

    pub fn sum(&self) -> Tensor<T> {
        let s = self.data().iter().copied().sum();
        Tensor::from_op(Vec::new(), vec![s], Op::Sum, vec![self.clone()])
    }

    pub fn mean(&self) -> Tensor<T> {
        let n = T::from_usize(self.numel().max(1)).unwrap();
        let s: T = self.data().iter().copied().sum();
        Tensor::from_op(Vec::new(), vec![s / n], Op::Mean, vec![self.clone()])
    }

    /// Kronecker product of two matrices.
    pub fn kron(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        let (m, n) = matrix_dims(self, "kron")?;
        let (p, q) = matrix_dims(rhs, "kron")?;
        if self.numel() == 0 || rhs.numel() == 0 {
            return Err(Error::EmptyInput("kron"));
        }
        let a = self.data();
        let b = rhs.data();
        let cols = n * q;
        let mut out = vec![T::zero(); m * p * cols];
        for i in 0..m {
            for j in 0..n {
                let s = a[i * n + j];
                for k in 0..p {
                    let dst = (i * p + k) * cols + j * q;
                    out[dst..dst + q]
                        .iter_mut()
                        .zip(&b[k * q..(k + 1) * q])
                        .for_each(|(o, &v)| *o = s * v);
                }
            }
        }
        drop((a, b));
        Ok(Tensor::from_op(vec![m * p, cols], out, Op::Kron, vec![self.clone(), rhs.clone()]))
    }

    /// Per-column normalization of a `[rows, d]` matrix followed by
    /// `gamma * xhat + beta`.
    ///
    /// With `stats = None` the batch's own mean and biased variance are used
    /// (training) and returned; otherwise the supplied mean/variance are used
    /// as constants (evaluation).
    pub fn batch_norm(
        &self,
        gamma: &Tensor<T>,
        beta: &Tensor<T>,
        stats: Option<(&[T], &[T])>,
        eps: T,
    ) -> Result<(Tensor<T>, Option<BatchNormStats<T>>)> {
        let (rows, d) = matrix_dims(self, "batch_norm")?;
        if gamma.shape() != [d] || beta.shape() != [d] {
            return Err(Error::shape("batch_norm", self.shape(), gamma.shape()));
        }
        if let Some((m, v)) = stats {
            if m.len() != d || v.len() != d {
                return Err(Error::shape("batch_norm", self.shape(), &[m.len()]));
            }
        }
        let x = self.data();
        let (mean, var, batch_stats) = match stats {
            Some((m, v)) => (m.to_vec(), v.to_vec(), false),
            None => {
                if rows < 2 {
                    return Err(Error::BatchTooSmall(rows));
                }
                let nr = T::from_usize(rows).unwrap();
                let mut mean = vec![T::zero(); d];
                for row in x.chunks(d) {
                    mean.iter_mut().zip(row).for_each(|(m, &v)| *m += v);
                }
                mean.iter_mut().for_each(|m| *m = *m / nr);
                let mut var = vec![T::zero(); d];
                for row in x.chunks(d) {
                    for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s = *s / nr);
                (mean, var, true)
            }
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let g = gamma.data();
        let b = beta.data();
        let mut xhat = Vec::with_capacity(x.len());
        let mut out = Vec::with_capacity(x.len());
        for row in x.chunks(d) {
            for c in 0..d {
                let h = (row[c] - mean[c]) * inv_std[c];
                xhat.push(h);
                out.push(g[c] * h + b[c]);
            }
        }
        drop((x, g, b));
        let result = Tensor::from_op(
            vec![rows, d],
            out,
            Op::BatchNorm {
                xhat,
                inv_std,
                batch_stats,
            },
            vec![self.clone(), gamma.clone(), beta.clone()],
        );
        Ok((result, batch_stats.then_some(BatchNormStats { mean, var })))
    }

    /// Mean softmax cross-entropy of `[rows, classes]` logits.
    pub fn cross_entropy(&self, targets: &[usize]) -> Result<Tensor<T>> {
        let (rows, classes) = matrix_dims(self, "cross_entropy")?;
        if targets.len() != rows {
            return Err(Error::shape("cross_entropy", self.shape(), &[targets.len()]));
        }
        if rows == 0 {
            return Err(Error::EmptyInput("cross_entropy"));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= classes) {
            return Err(Error::TargetOutOfRange { target: t, classes });
        }
        let probs = softmax_rows(&self.data(), classes);
        let x = self.data();
        let mut total = T::zero();
        for (r, &t) in targets.iter().enumerate() {
            let row = &x[r * classes..(r + 1) * classes];
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
            total += lse - row[t];
        }
        drop(x);
        let loss = total / T::from_usize(rows).unwrap();
        Ok(Tensor::from_op(
            Vec::new(),
            vec![loss],
            Op::CrossEntropy {
                probs,
                targets: targets.to_vec(),
            },
            vec![self.clone()],
        ))
    }
}

/// Row-wise max-shifted softmax of a row-major `[rows, classes]` buffer.
pub(crate) fn softmax_rows<T: Scalar>(x: &[T], classes: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(classes) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = out.len();
        out.extend(row.iter().map(|&v| (v - max).exp()));
        let z: T = out[start..].iter().copied().sum();
        out[start..].iter_mut().for_each(|p| *p = *p / z);
    }
    out
}

/// Gradients of `node`'s inputs given the upstream gradient `g` of `out`.
pub(super) fn backward<T: Scalar>(node: &Node<T>, out: &Tensor<T>, g: &[T]) -> Vec<Option<Vec<T>>> {
    let inputs = &node.inputs;
    let wants = |i: usize| inputs[i].requires_grad();
    match &node.op {
        Op::Add => vec![wants(0).then(|| g.to_vec()), wants(1).then(|| g.to_vec())],
        Op::Sub => vec![
            wants(0).then(|| g.to_vec()),
            wants(1).then(|| g.iter().map(|&v| -v).collect()),
        ],
        Op::Mul => {
            let a = inputs[0].data();
            let b = inputs[1].data();
            vec![
                wants(0).then(|| zip_map(g, &b, |gv, bv| gv * bv)),
                wants(1).then(|| zip_map(g, &a, |gv, av| gv * av)),
            ]
        }
        Op::MulScalar(s) => vec![Some(g.iter().map(|&v| v * *s).collect())],
        Op::AddRow => {
            let d = inputs[1].numel();
            let db = wants(1).then(|| {
                let mut acc = vec![T::zero(); d];
                for row in g.chunks(d) {
                    acc.iter_mut().zip(row).for_each(|(a, &v)| *a += v);
                }
                acc
            });
            vec![wants(0).then(|| g.to_vec()), db]
        }
        Op::Relu => {
            let x = inputs[0].data();
            vec![Some(zip_map(g, &x, |gv, xv| if xv > T::zero() { gv } else { T::zero() }))]
        }
        Op::MatMul { trans_b } => {
            let a = inputs[0].data();
            let b = inputs[1].data();
            let (m, k) = (inputs[0].shape()[0], inputs[0].shape()[1]);
            let n = out.shape()[1];
            let da = wants(0).then(|| {
                // dA = G * B^T, where B is k x n logically.
                let mut da = vec![T::zero(); m * k];
                T::gemm(m, n, k, g, false, &b, !*trans_b, &mut da, false);
                da
            });
            let db = wants(1).then(|| {
                if *trans_b {
                    // rhs stored n x k: d(rhs) = G^T * A.
                    let mut db = vec![T::zero(); n * k];
                    T::gemm(n, m, k, g, true, &a, false, &mut db, false);
                    db
                } else {
                    let mut db = vec![T::zero(); k * n];
                    T::gemm(k, m, n, &a, true, g, false, &mut db, false);
                    db
                }
            });
            vec![da, db]
        }
        Op::Concat { axis } => {
            let axis = *axis;
            let inner: usize = out.shape()[axis + 1..].iter().product();
            let outer: usize = out.shape()[..axis].iter().product();
            let chunks: Vec<usize> = inputs.iter().map(|t| t.shape()[axis] * inner).collect();
            let total: usize = chunks.iter().sum();
            let mut offset = 0;
            chunks
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let grad = wants(i).then(|| {
                        let mut v = Vec::with_capacity(outer * c);
                        for o in 0..outer {
                            let start = o * total + offset;
                            v.extend_from_slice(&g[start..start + c]);
                        }
                        v
                    });
                    offset += c;
                    grad
                })
                .collect()
        }
        Op::Reshape => vec![Some(g.to_vec())],
        Op::Sum => vec![Some(vec![g[0]; inputs[0].numel()])],
        Op::Mean => {
            let n = inputs[0].numel();
            vec![Some(vec![g[0] / T::from_usize(n.max(1)).unwrap(); n])]
        }
        Op::Kron => {
            let (m, n) = (inputs[0].shape()[0], inputs[0].shape()[1]);
            let (p, q) = (inputs[1].shape()[0], inputs[1].shape()[1]);
            let cols = n * q;
            let a = inputs[0].data();
            let b = inputs[1].data();
            let mut da = wants(0).then(|| vec![T::zero(); m * n]);
            let mut db = wants(1).then(|| vec![T::zero(); p * q]);
            for i in 0..m {
                for j in 0..n {
                    let s = a[i * n + j];
                    let mut acc = T::zero();
                    for k in 0..p {
                        let src = (i * p + k) * cols + j * q;
                        let gb = &g[src..src + q];
                        let brow = &b[k * q..(k + 1) * q];
                        if da.is_some() {
                            acc += gb.iter().zip(brow).map(|(&x, &y)| x * y).sum::<T>();
                        }
                        if let Some(db) = db.as_mut() {
                            db[k * q..(k + 1) * q]
                                .iter_mut()
                                .zip(gb)
                                .for_each(|(d, &gv)| *d += gv * s);
                        }
                    }
                    if let Some(da) = da.as_mut() {
                        da[i * n + j] = acc;
                    }
                }
            }
            vec![da, db]
        }
        Op::BatchNorm {
            xhat,
            inv_std,
            batch_stats,
        } => {
            let d = inv_std.len();
            let rows = g.len() / d;
            let gamma = inputs[1].data();
            let mut dgamma = vec![T::zero(); d];
            let mut dbeta = vec![T::zero(); d];
            for (gr, hr) in g.chunks(d).zip(xhat.chunks(d)) {
                for c in 0..d {
                    dgamma[c] += gr[c] * hr[c];
                    dbeta[c] += gr[c];
                }
            }
            let dx = wants(0).then(|| {
                let mut dx = vec![T::zero(); g.len()];
                if *batch_stats {
                    // dx = inv_std / N * (N dxhat - sum(dxhat) - xhat sum(dxhat xhat))
                    let nr = T::from_usize(rows).unwrap();
                    for c in 0..d {
                        let k = gamma[c] * inv_std[c] / nr;
                        for r in 0..rows {
                            let i = r * d + c;
                            dx[i] = k * (nr * g[i] - dbeta[c] - xhat[i] * dgamma[c]);
                        }
                    }
                } else {
                    for (i, v) in dx.iter_mut().enumerate() {
                        let c = i % d;
                        *v = g[i] * gamma[c] * inv_std[c];
                    }
                }
                dx
            });
            vec![dx, wants(1).then_some(dgamma), wants(2).then_some(dbeta)]
        }
        Op::CrossEntropy { probs, targets } => {
            let rows = targets.len();
            let classes = probs.len() / rows;
            let scale = g[0] / T::from_usize(rows).unwrap();
            let mut d = probs.clone();
            for (r, &t) in targets.iter().enumerate() {
                d[r * classes + t] = d[r * classes + t] - T::one();
            }
            d.iter_mut().for_each(|v| *v = *v * scale);
            vec![Some(d)]
        }
    }
}
