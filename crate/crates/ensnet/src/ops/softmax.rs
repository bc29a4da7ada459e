//! Row softmax, cross-entropy loss, and their gradients.
//!
//! Softmax subtracts the row maximum before exponentiating, so any finite
//! logits produce finite, normalized scores.

use super::OpError;
use crate::tensor::Tensor;

const LOG_CLAMP: f64 = 1e-12;

fn rows(t: &Tensor) -> Result<(usize, usize), OpError> {
    match t.dims().len() {
        1 => Ok((1, t.dims()[0])),
        2 => Ok((t.dims()[0], t.dims()[1])),
        _ => Err(OpError::ShapeMismatch(format!(
            "softmax expects a vector or (batch, classes), got {:?}",
            t.dims()
        ))),
    }
}

/// exp(x_j - max) / sum_k exp(x_k - max), row by row.
pub fn softmax(logits: &Tensor) -> Result<Tensor, OpError> {
    let (n, e) = rows(logits)?;
    if e == 0 {
        return Err(OpError::EmptyInput("softmax over an empty row".into()));
    }
    let x = logits.data();
    let mut out = Tensor::zeros(logits.dims());
    let o = out.data_mut();
    for r in 0..n {
        let row = &x[r * e..(r + 1) * e];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (i, &v) in row.iter().enumerate() {
            let ev = (v - max).exp();
            o[r * e + i] = ev;
            sum += ev;
        }
        for i in 0..e {
            o[r * e + i] /= sum;
        }
    }
    Ok(out)
}

/// Full softmax Jacobian product: gx_i = p_i * (g_i - sum_j g_j p_j).
pub fn softmax_backward(probs: &Tensor, grad_out: &Tensor) -> Result<Tensor, OpError> {
    if probs.dims() != grad_out.dims() {
        return Err(OpError::ShapeMismatch(
            "softmax grad dims differ from probs".into(),
        ));
    }
    let (n, e) = rows(probs)?;
    let p = probs.data();
    let g = grad_out.data();
    let mut gx = Tensor::zeros(probs.dims());
    let gxd = gx.data_mut();
    for r in 0..n {
        let base = r * e;
        let mut dot = 0.0;
        for i in 0..e {
            dot += g[base + i] * p[base + i];
        }
        for i in 0..e {
            gxd[base + i] = p[base + i] * (g[base + i] - dot);
        }
    }
    Ok(gx)
}

/// Mean negative log-likelihood with probabilities clamped below at 1e-12.
pub fn cross_entropy(probs: &Tensor, labels: &[u32]) -> Result<f64, OpError> {
    let (n, e) = rows(probs)?;
    if labels.len() != n {
        return Err(OpError::ShapeMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            n
        )));
    }
    if n == 0 {
        return Err(OpError::EmptyInput("cross entropy over zero rows".into()));
    }
    let p = probs.data();
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        if label as usize >= e {
            return Err(OpError::LabelOutOfRange { label, classes: e });
        }
        loss -= p[r * e + label as usize].max(LOG_CLAMP).ln();
    }
    Ok(loss / n as f64)
}

/// Gradient of mean cross-entropy with respect to the logits that produced
/// `probs`: (p - onehot) / batch. This is the fused softmax+loss backward.
pub fn cross_entropy_logits_grad(probs: &Tensor, labels: &[u32]) -> Result<Tensor, OpError> {
    let (n, e) = rows(probs)?;
    if labels.len() != n {
        return Err(OpError::ShapeMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            n
        )));
    }
    let p = probs.data();
    let mut gx = Tensor::zeros(probs.dims());
    let gxd = gx.data_mut();
    let inv_n = 1.0 / n as f64;
    for (r, &label) in labels.iter().enumerate() {
        if label as usize >= e {
            return Err(OpError::LabelOutOfRange { label, classes: e });
        }
        let base = r * e;
        for i in 0..e {
            let y = if i == label as usize { 1.0 } else { 0.0 };
            gxd[base + i] = (p[base + i] - y) * inv_n;
        }
    }
    Ok(gx)
}
