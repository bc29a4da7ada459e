//! Local response normalization and batch normalization.

use super::OpError;
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// Cross-channel normalization constants. Defaults are the classic
/// (n, alpha, beta, k) = (5, 1e-4, 0.75, 2) values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrnParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
}

impl Default for LrnParams {
    fn default() -> Self {
        LrnParams {
            n: 5,
            alpha: 1e-4,
            beta: 0.75,
            k: 2.0,
        }
    }
}

fn lrn_window(c: usize, channels: usize, n: usize) -> (usize, usize) {
    let half = n / 2;
    let lo = c.saturating_sub(half);
    let hi = (c + half).min(channels - 1);
    (lo, hi)
}

/// b_c = a_c / (k + alpha * sum_{j in window(c)} a_j^2)^beta, window of n
/// channels centered on c and clipped at the edges.
pub fn lrn(input: &Tensor, p: &LrnParams) -> Result<Tensor, OpError> {
    let (b, h, w, c) = input.dims4();
    let x = input.data();
    let mut out = Tensor::zeros(input.dims());
    let o = out.data_mut();
    for base in (0..b * h * w * c).step_by(c) {
        for ci in 0..c {
            let (lo, hi) = lrn_window(ci, c, p.n);
            let mut sq = 0.0;
            for j in lo..=hi {
                sq += x[base + j] * x[base + j];
            }
            let d = p.k + p.alpha * sq;
            o[base + ci] = x[base + ci] * d.powf(-p.beta);
        }
    }
    Ok(out)
}

pub fn lrn_backward(input: &Tensor, p: &LrnParams, grad_out: &Tensor) -> Result<Tensor, OpError> {
    if input.dims() != grad_out.dims() {
        return Err(OpError::ShapeMismatch(
            "lrn grad dims differ from input".into(),
        ));
    }
    let (b, h, w, c) = input.dims4();
    let x = input.data();
    let go = grad_out.data();
    let mut gx = Tensor::zeros(input.dims());
    let gxd = gx.data_mut();
    let mut denom = vec![0.0f64; c];
    for base in (0..b * h * w * c).step_by(c) {
        for ci in 0..c {
            let (lo, hi) = lrn_window(ci, c, p.n);
            let mut sq = 0.0;
            for j in lo..=hi {
                sq += x[base + j] * x[base + j];
            }
            denom[ci] = p.k + p.alpha * sq;
        }
        for m in 0..c {
            let (lo, hi) = lrn_window(m, c, p.n);
            let mut acc = go[base + m] * denom[m].powf(-p.beta);
            // the window relation is symmetric: m influences exactly the
            // outputs whose windows contain m
            let mut cross = 0.0;
            for i in lo..=hi {
                cross += go[base + i] * x[base + i] * denom[i].powf(-p.beta - 1.0);
            }
            acc -= 2.0 * p.alpha * p.beta * x[base + m] * cross;
            gxd[base + m] = acc;
        }
    }
    Ok(gx)
}

/// Learnable scale/shift plus running statistics for inference.
#[derive(Debug, Clone)]
pub struct BnState {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
}

impl BnState {
    pub fn new(channels: usize) -> Self {
        BnState {
            gamma: Tensor::filled(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::filled(&[channels], 1.0),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// Per-channel batch statistics cached by the training forward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

pub struct BnGrads {
    pub input: Tensor,
    pub gamma: Tensor,
    pub beta: Tensor,
}

fn bn_check(input: &Tensor, state: &BnState) -> Result<usize, OpError> {
    let c = *input.dims().last().unwrap_or(&0);
    if c == 0 || input.dims().len() < 2 {
        return Err(OpError::ShapeMismatch(
            "batchnorm needs (batch, ..., channels)".into(),
        ));
    }
    if state.channels() != c {
        return Err(OpError::ShapeMismatch(format!(
            "batchnorm state has {} channels, input has {}",
            state.channels(),
            c
        )));
    }
    Ok(c)
}

/// Normalizes each channel over the batch (and any spatial dims), updates the
/// running statistics, and returns the cached batch moments for backward.
pub fn batchnorm_train(input: &Tensor, state: &mut BnState) -> Result<(Tensor, BnCache), OpError> {
    let c = bn_check(input, state)?;
    if input.batch() < 2 {
        return Err(OpError::DegenerateBatch(
            "batchnorm train mode needs batch size >= 2".into(),
        ));
    }
    let x = input.data();
    let n = (x.len() / c) as f64;
    let mut mean = vec![0.0f64; c];
    let mut var = vec![0.0f64; c];
    for row in (0..x.len()).step_by(c) {
        for ci in 0..c {
            mean[ci] += x[row + ci];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    for row in (0..x.len()).step_by(c) {
        for ci in 0..c {
            let d = x[row + ci] - mean[ci];
            var[ci] += d * d;
        }
    }
    for v in var.iter_mut() {
        *v /= n;
    }
    let mut out = Tensor::zeros(input.dims());
    {
        let o = out.data_mut();
        let g = state.gamma.data();
        let bta = state.beta.data();
        for row in (0..x.len()).step_by(c) {
            for ci in 0..c {
                let xh = (x[row + ci] - mean[ci]) / (var[ci] + BN_EPS).sqrt();
                o[row + ci] = g[ci] * xh + bta[ci];
            }
        }
    }
    {
        let rm = state.running_mean.data_mut();
        let rv = state.running_var.data_mut();
        for ci in 0..c {
            rm[ci] = BN_MOMENTUM * rm[ci] + (1.0 - BN_MOMENTUM) * mean[ci];
            rv[ci] = BN_MOMENTUM * rv[ci] + (1.0 - BN_MOMENTUM) * var[ci];
        }
    }
    Ok((out, BnCache { mean, var }))
}

pub fn batchnorm_infer(input: &Tensor, state: &BnState) -> Result<Tensor, OpError> {
    let c = bn_check(input, state)?;
    let x = input.data();
    let mut out = Tensor::zeros(input.dims());
    let o = out.data_mut();
    let g = state.gamma.data();
    let bta = state.beta.data();
    let rm = state.running_mean.data();
    let rv = state.running_var.data();
    for row in (0..x.len()).step_by(c) {
        for ci in 0..c {
            let xh = (x[row + ci] - rm[ci]) / (rv[ci] + BN_EPS).sqrt();
            o[row + ci] = g[ci] * xh + bta[ci];
        }
    }
    Ok(out)
}

pub fn batchnorm_backward(
    input: &Tensor,
    state: &BnState,
    cache: &BnCache,
    grad_out: &Tensor,
) -> Result<BnGrads, OpError> {
    let c = bn_check(input, state)?;
    if input.dims() != grad_out.dims() {
        return Err(OpError::ShapeMismatch(
            "batchnorm grad dims differ from input".into(),
        ));
    }
    let x = input.data();
    let go = grad_out.data();
    let n = (x.len() / c) as f64;
    let mut sum_g = vec![0.0f64; c];
    let mut sum_gx = vec![0.0f64; c];
    for row in (0..x.len()).step_by(c) {
        for ci in 0..c {
            let xh = (x[row + ci] - cache.mean[ci]) / (cache.var[ci] + BN_EPS).sqrt();
            sum_g[ci] += go[row + ci];
            sum_gx[ci] += go[row + ci] * xh;
        }
    }
    let mut gx = Tensor::zeros(input.dims());
    let mut ggamma = Tensor::zeros(&[c]);
    let mut gbeta = Tensor::zeros(&[c]);
    {
        let gxd = gx.data_mut();
        let gam = state.gamma.data();
        for row in (0..x.len()).step_by(c) {
            for ci in 0..c {
                let inv = 1.0 / (cache.var[ci] + BN_EPS).sqrt();
                let xh = (x[row + ci] - cache.mean[ci]) * inv;
                gxd[row + ci] =
                    gam[ci] * inv * (go[row + ci] - sum_g[ci] / n - xh * sum_gx[ci] / n);
            }
        }
        ggamma.data_mut().copy_from_slice(&sum_gx);
        gbeta.data_mut().copy_from_slice(&sum_g);
    }
    Ok(BnGrads {
        input: gx,
        gamma: ggamma,
        beta: gbeta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn bn_two_sample_closed_form() {
        let x = Tensor::from_vec(&[2, 1], vec![1.0, 3.0]);
        let mut st = BnState::new(1);
        let (y, cache) = batchnorm_train(&x, &mut st).unwrap();
        // (x - mu) / sqrt(var + eps) with mu=2, var=1
        let expect = 1.0 / (1.0 + BN_EPS).sqrt();
        assert!((y.data()[0] + expect).abs() <= 1e-15);
        assert!((y.data()[1] - expect).abs() <= 1e-15);
        assert_eq!(cache.mean, vec![2.0]);
        assert_eq!(cache.var, vec![1.0]);
    }

    #[test]
    fn bn_rejects_batch_of_one() {
        let x = Tensor::zeros(&[1, 2, 2, 3]);
        let mut st = BnState::new(3);
        assert!(matches!(
            batchnorm_train(&x, &mut st),
            Err(OpError::DegenerateBatch(_))
        ));
    }

    #[test]
    fn bn_train_output_is_standardized() {
        let mut rng = Rng::new(13);
        let dims = [4, 3, 3, 2];
        let data: Vec<f64> = (0..dims.iter().product())
            .map(|_| rng.uniform(-4.0, 4.0))
            .collect();
        let x = Tensor::from_vec(&dims, data);
        let mut st = BnState::new(2);
        let (y, _) = batchnorm_train(&x, &mut st).unwrap();
        let c = 2;
        let n = (y.len() / c) as f64;
        for ci in 0..c {
            let mut mean = 0.0;
            let mut var = 0.0;
            for row in (0..y.len()).step_by(c) {
                mean += y.data()[row + ci];
            }
            mean /= n;
            for row in (0..y.len()).step_by(c) {
                let d = y.data()[row + ci] - mean;
                var += d * d;
            }
            var /= n;
            assert!(mean.abs() <= 1e-9, "channel {ci} mean {mean}");
            assert!((var - 1.0).abs() <= 1e-3, "channel {ci} var {var}");
        }
    }

    #[test]
    fn bn_infer_uses_running_stats() {
        let x = Tensor::from_vec(&[2, 1], vec![5.0, 5.0]);
        let st = BnState::new(1); // fresh stats: mean 0, var 1
        let y = batchnorm_infer(&x, &st).unwrap();
        let expect = 5.0 / (1.0 + BN_EPS).sqrt();
        assert!((y.data()[0] - expect).abs() <= 1e-12);
    }

    #[test]
    fn lrn_matches_direct_formula() {
        let p = LrnParams::default();
        let mut rng = Rng::new(4);
        let c = 8;
        let data: Vec<f64> = (0..c).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let x = Tensor::from_vec(&[1, 1, 1, c], data.clone());
        let y = lrn(&x, &p).unwrap();
        for ci in 0..c {
            let lo = ci.saturating_sub(2);
            let hi = (ci + 2).min(c - 1);
            let sq: f64 = data[lo..=hi].iter().map(|v| v * v).sum();
            let expect = data[ci] * (p.k + p.alpha * sq).powf(-p.beta);
            assert!((y.data()[ci] - expect).abs() <= 1e-15);
        }
    }

    #[test]
    fn lrn_is_parameterless_shape_preserving() {
        let x = Tensor::zeros(&[2, 3, 3, 4]);
        let y = lrn(&x, &LrnParams::default()).unwrap();
        assert_eq!(y.dims(), x.dims());
        assert!(y.data().iter().all(|&v| v == 0.0));
    }
}
