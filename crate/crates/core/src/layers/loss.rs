use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Mean categorical cross-entropy of `[batch, classes]` logits against
/// class indices.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, targets: &[usize]) -> Result<Tensor<T>> {
    logits.cross_entropy(targets)
}

/// Row-wise softmax probabilities of `[batch, classes]` logits.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Vec<Vec<T>>> {
    let &[_, classes] = logits.shape() else {
        return Err(Error::shape("softmax", logits.shape(), &[0, 0]));
    };
    let probs = crate::autodiff::softmax_rows(&logits.data(), classes);
    Ok(probs.chunks(classes).map(<[T]>::to_vec).collect())
}
