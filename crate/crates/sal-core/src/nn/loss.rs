//! Loss functions and the backward entry signal.
//!
//! Softmax cross-entropy follows the log-sum-exp form, so it is stable under
//! arbitrary logit shifts. For a target `y` with entries in [0, 1] the logit
//! gradient is `(Σᵢ yᵢ)·a − y` with `a = softmax(z)`, which reduces to the
//! familiar `a − y` when `y` is one-hot.

use ndarray::{Array, Array1, Array2, ArrayView, ArrayView1, Dimension};

use crate::{Error, Result};

/// Gradient of a scalar loss at the points where it touches a network:
/// always at the output logits, optionally at hidden post-activations
/// (one slot per hidden layer).
#[derive(Debug, Clone)]
pub struct BackwardSignal {
    pub logit_grad: Array2<f64>,
    pub hidden_grads: Vec<Option<Array2<f64>>>,
}

impl BackwardSignal {
    /// A loss touching only the output logits (e.g. cross-entropy).
    pub fn output_only(logit_grad: Array2<f64>, hidden_layer_count: usize) -> Self {
        BackwardSignal { logit_grad, hidden_grads: vec![None; hidden_layer_count] }
    }
}

/// Numerically stable softmax of one logit vector.
pub fn softmax(z: ArrayView1<f64>) -> Array1<f64> {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps = z.mapv(|v| (v - max).exp());
    let sum: f64 = exps.sum();
    exps / sum
}

fn log_sum_exp(z: ArrayView1<f64>) -> f64 {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    max + z.fold(0.0, |s, &v| s + (v - max).exp()).ln()
}

/// Softmax cross-entropy for one sample: `loss = −Σ yᵢ log softmax(z)ᵢ`
/// and its exact logit gradient.
///
/// Targets may be any vector in [0, 1]^n; a one-hot target gives the usual
/// `a − y` gradient.
pub fn softmax_ce(logits: ArrayView1<f64>, target: ArrayView1<f64>) -> Result<(f64, Array1<f64>)> {
    if logits.len() != target.len() {
        return Err(Error::Shape(format!(
            "logits length {} != target length {}",
            logits.len(),
            target.len()
        )));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    if target.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Domain("target entries must lie in [0, 1]".into()));
    }
    let lse = log_sum_exp(logits);
    let loss = target
        .iter()
        .zip(logits.iter())
        .map(|(&y, &z)| y * (lse - z))
        .sum::<f64>();
    let a = softmax(logits);
    let y_sum: f64 = target.sum();
    let grad = a.mapv(|av| y_sum * av) - &target.to_owned();
    Ok((loss, grad))
}

/// Mean squared error over all elements, with its exact gradient
/// `2 (pred − target) / count`. Works for vectors and matrices alike.
pub fn mse<D: Dimension>(
    pred: ArrayView<f64, D>,
    target: ArrayView<f64, D>,
) -> Result<(f64, Array<f64, D>)> {
    if pred.raw_dim() != target.raw_dim() {
        return Err(Error::Shape(format!(
            "mse shapes differ: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let count = pred.len();
    if count == 0 {
        return Err(Error::Shape("mse over empty arrays".into()));
    }
    let mut loss = 0.0;
    for (&p, &t) in pred.iter().zip(target.iter()) {
        let d = p - t;
        loss += d * d;
    }
    loss /= count as f64;
    let scale = 2.0 / count as f64;
    let grad = ndarray::Zip::from(&pred).and(&target).map_collect(|&p, &t| scale * (p - t));
    Ok((loss, grad))
}

/// Batch-mean cross-entropy over one-hot target rows, returning the loss and
/// the backward signal `(softmax(Z) − Y) / batch`.
pub fn ce_head(logits: &Array2<f64>, targets: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if logits.raw_dim() != targets.raw_dim() {
        return Err(Error::Shape("logits/targets shape mismatch".into()));
    }
    let batch = logits.nrows();
    if batch == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    let mut total = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for (i, (z_row, y_row)) in logits.outer_iter().zip(targets.outer_iter()).enumerate() {
        let (loss, g) = softmax_ce(z_row, y_row)?;
        total += loss;
        grad.row_mut(i).assign(&(g / batch as f64));
    }
    Ok((total / batch as f64, grad))
}
