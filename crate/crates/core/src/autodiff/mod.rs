//! Dense tensors with eager, tape-free reverse-mode differentiation.
//!
//! Every operation on a tensor that requires a gradient records a [`Node`]
//! (the operation plus handles to its inputs) on its output. Calling
//! [`Tensor::backward`] on a scalar walks that graph in reverse topological
//! order, accumulates `dLoss/dT` into every reachable tensor's gradient slot
//! and then releases the graph. Parameters are ordinary leaf tensors with
//! `requires_grad` set; their gradients persist until [`Tensor::zero_grad`].
//!
//! Storage is generic over [`Scalar`]: `f32` for training, `f64` for
//! gradient checks.

mod ops;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::iter::Sum;
use std::ops::AddAssign;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

pub use ops::BatchNormStats;
pub(crate) use ops::softmax_rows;

/// Element type of a [`Tensor`].
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + AddAssign + Sum + Default + Send + Sync + fmt::Debug + 'static
{
    /// Short dtype tag used in checkpoints and diagnostics.
    const DTYPE: &'static str;

    /// `c = a * b (+ c)` where `a` is logically `m x k` and `b` is `k x n`.
    /// `a_t` / `b_t` mean the operand is stored transposed.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        a_t: bool,
        b: &[Self],
        b_t: bool,
        c: &mut [Self],
        accumulate: bool,
    );

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion")
    }
}

fn strides(rows: usize, cols: usize, transposed: bool) -> (isize, isize) {
    // Logical rows x cols; stored either as rows x cols or cols x rows.
    if transposed {
        (1, rows as isize)
    } else {
        (cols as isize, 1)
    }
}

macro_rules! impl_scalar {
    ($t:ty, $name:literal, $kernel:path) => {
        impl Scalar for $t {
            const DTYPE: &'static str = $name;

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                a_t: bool,
                b: &[Self],
                b_t: bool,
                c: &mut [Self],
                accumulate: bool,
            ) {
                assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
                if m == 0 || n == 0 {
                    return;
                }
                let (rsa, csa) = strides(m, k, a_t);
                let (rsb, csb) = strides(k, n, b_t);
                let beta = if accumulate { 1.0 } else { 0.0 };
                // SAFETY: the length assertion above bounds every access made
                // with these strides.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, "f32", matrixmultiply::sgemm);
impl_scalar!(f64, "f64", matrixmultiply::dgemm);

pub(crate) enum Op<T: Scalar> {
    Add,
    Sub,
    Mul,
    MulScalar(T),
    AddRow,
    Relu,
    MatMul { trans_b: bool },
    Concat { axis: usize },
    Reshape,
    Sum,
    Mean,
    Kron,
    BatchNorm { xhat: Vec<T>, inv_std: Vec<T>, batch_stats: bool },
    CrossEntropy { probs: Vec<T>, targets: Vec<usize> },
}

/// Producing operation of a non-leaf tensor.
pub(crate) struct Node<T: Scalar> {
    op: Op<T>,
    inputs: Vec<Tensor<T>>,
}

struct Inner<T: Scalar> {
    shape: Vec<usize>,
    data: RwLock<Vec<T>>,
    grad: Mutex<Option<Vec<T>>>,
    requires_grad: bool,
    node: Mutex<Option<Node<T>>>,
    consumed: AtomicBool,
}

/// Shared handle to an n-dimensional array. Cloning is cheap and aliases
/// the same storage.
pub struct Tensor<T: Scalar = f32> {
    inner: Arc<Inner<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("dtype", &T::DTYPE)
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .finish()
    }
}

fn read<U>(lock: &RwLock<U>) -> RwLockReadGuard<'_, U> {
    lock.read().unwrap_or_else(PoisonError::into_inner)
}

fn write<U>(lock: &RwLock<U>) -> RwLockWriteGuard<'_, U> {
    lock.write().unwrap_or_else(PoisonError::into_inner)
}

fn lock<U>(m: &Mutex<U>) -> MutexGuard<'_, U> {
    m.lock().unwrap_or_else(PoisonError::into_inner)
}

impl<T: Scalar> Tensor<T> {
    fn build(shape: Vec<usize>, data: Vec<T>, requires_grad: bool, node: Option<Node<T>>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self {
            inner: Arc::new(Inner {
                shape,
                data: RwLock::new(data),
                grad: Mutex::new(None),
                requires_grad,
                node: Mutex::new(node),
                consumed: AtomicBool::new(false),
            }),
        }
    }

    /// Constant tensor (no gradient).
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::shape("tensor", shape, &[data.len()]));
        }
        Ok(Self::build(shape.to_vec(), data, false, None))
    }

    /// Trainable leaf tensor.
    pub fn parameter(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::shape("parameter", shape, &[data.len()]));
        }
        Ok(Self::build(shape.to_vec(), data, true, None))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::build(shape.to_vec(), vec![T::zero(); shape.iter().product()], false, None)
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self::build(shape.to_vec(), vec![value; shape.iter().product()], false, None)
    }

    pub fn scalar(value: T) -> Self {
        Self::build(Vec::new(), vec![value], false, None)
    }

    /// Builds an `f64` vector into this precision.
    pub fn from_f64(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::new(shape, data.iter().map(|&v| T::from_f64_lossy(v)).collect())
    }

    /// Same values, detached from any graph, with the given trainable flag.
    pub fn detached(&self, requires_grad: bool) -> Self {
        Self::build(self.inner.shape.clone(), self.to_vec(), requires_grad, None)
    }

    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<T>, op: Op<T>, inputs: Vec<Tensor<T>>) -> Self {
        let requires_grad = inputs.iter().any(Tensor::requires_grad);
        let node = requires_grad.then_some(Node { op, inputs });
        Self::build(shape, data, requires_grad, node)
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn ndim(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    /// Whether this tensor was produced by a recorded operation.
    pub fn has_node(&self) -> bool {
        lock(&self.inner.node).is_some()
    }

    pub fn data(&self) -> RwLockReadGuard<'_, Vec<T>> {
        read(&self.inner.data)
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.data().clone()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data().iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn item(&self) -> T {
        self.data()[0]
    }

    /// Overwrites the values in place (parameter updates, running stats).
    pub fn set_data(&self, values: Vec<T>) -> Result<()> {
        if values.len() != self.numel() {
            return Err(Error::shape("set_data", self.shape(), &[values.len()]));
        }
        *write(&self.inner.data) = values;
        Ok(())
    }

    pub fn update_data(&self, f: impl FnOnce(&mut [T])) {
        f(&mut write(&self.inner.data));
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        lock(&self.inner.grad).clone()
    }

    pub fn take_grad(&self) -> Option<Vec<T>> {
        lock(&self.inner.grad).take()
    }

    pub fn zero_grad(&self) {
        *lock(&self.inner.grad) = None;
    }

    fn accumulate_grad(&self, g: Vec<T>) {
        let mut slot = lock(&self.inner.grad);
        match slot.as_mut() {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => *slot = Some(g),
        }
    }

    fn id(&self) -> usize {
        Arc::as_ptr(&self.inner) as usize
    }

    /// Backpropagates from this scalar into every reachable tensor that
    /// requires a gradient, then frees the recorded graph.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(Error::NonScalarLoss(self.shape().to_vec()));
        }
        if self.inner.consumed.load(Ordering::Acquire) {
            return Err(Error::DoubleBackward);
        }
        if !self.requires_grad() {
            return Err(Error::NoGradient);
        }

        // Post-order DFS: every tensor appears after all of its inputs.
        let mut order: Vec<Tensor<T>> = Vec::new();
        let mut visited = HashSet::new();
        let mut stack = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if !visited.insert(t.id()) {
                continue;
            }
            let children: Vec<Tensor<T>> = lock(&t.inner.node)
                .as_ref()
                .map(|n| n.inputs.iter().filter(|i| i.requires_grad()).cloned().collect())
                .unwrap_or_default();
            stack.push((t, true));
            for c in children {
                if !visited.contains(&c.id()) {
                    stack.push((c, false));
                }
            }
        }

        let mut pending: HashMap<usize, Vec<T>> = HashMap::new();
        pending.insert(self.id(), vec![T::one()]);
        for t in order.iter().rev() {
            let Some(g) = pending.remove(&t.id()) else {
                continue;
            };
            let node = lock(&t.inner.node).take();
            if let Some(node) = node {
                t.inner.consumed.store(true, Ordering::Release);
                let input_grads = ops::backward(&node, t, &g);
                for (input, ig) in node.inputs.iter().zip(input_grads) {
                    let Some(ig) = ig else { continue };
                    if !input.requires_grad() {
                        continue;
                    }
                    match pending.get_mut(&input.id()) {
                        Some(acc) => acc.iter_mut().zip(ig).for_each(|(a, b)| *a += b),
                        None => {
                            pending.insert(input.id(), ig);
                        }
                    }
                }
            }
            t.accumulate_grad(g);
        }
        Ok(())
    }
}
