use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;

fn check(probs: &Tensor, labels: &[usize]) -> Result<usize> {
    if probs.shape.len() != 2 || probs.shape[0] != labels.len() {
        return shape_err(format!("probabilities {:?} for {} labels", probs.shape, labels.len()));
    }
    let k = probs.shape[1];
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(NnError::LabelOutOfRange { label, classes: k });
    }
    Ok(k)
}

/// Mean over the batch of `-ln p[true]`.
pub fn cross_entropy(probs: &Tensor, labels: &[usize]) -> Result<f64> {
    let k = check(probs, labels)?;
    if labels.is_empty() {
        return shape_err("empty batch");
    }
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(n, &l)| -probs.data[n * k + l].max(f64::MIN_POSITIVE).ln())
        .sum();
    Ok(total / labels.len() as f64)
}

/// Gradient of the mean cross-entropy w.r.t. the logits feeding a softmax:
/// `(p - onehot) / batch`.
pub fn softmax_cross_entropy_grad(probs: &Tensor, labels: &[usize]) -> Result<Tensor> {
    let k = check(probs, labels)?;
    let b = labels.len() as f64;
    let mut g = Tensor::new(probs.shape.clone(), probs.data.iter().map(|p| p / b).collect())?;
    for (n, &l) in labels.iter().enumerate() {
        g.data[n * k + l] -= 1.0 / b;
    }
    Ok(g)
}
