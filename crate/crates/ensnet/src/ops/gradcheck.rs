//! Central finite-difference verification of every analytic backward pass.
//!
//! Each check builds a small randomized problem, reduces the layer output to
//! a scalar through a fixed random projection (or the cross-entropy loss),
//! and compares the analytic gradient of every input and parameter
//! coordinate against (f(x+h) - f(x-h)) / 2h with h = 1e-5.
//!
//! Inputs for relu and the residual add are sampled away from zero, and
//! max-pool inputs are shuffled grids of distinct values, so the two-sided
//! difference never straddles a non-differentiable point.

use super::{
    batchnorm_backward, batchnorm_train, conv2d, conv2d_backward, cross_entropy,
    cross_entropy_logits_grad, dense, dense_backward, lrn, lrn_backward, pool2d, pool2d_backward,
    relu, relu_backward, softmax, BnState, Conv2dCfg, LrnParams, OpError, Pool2dCfg, PoolMode,
};
use crate::rng::Rng;
use crate::tensor::Tensor;

const H: f64 = 1e-5;
const KINK_MARGIN: f64 = 0.05;
const MAX_RESAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckTarget {
    Conv {
        kernel: usize,
        stride: usize,
        pad: usize,
        filters: usize,
    },
    PoolMax {
        window: usize,
        stride: usize,
        pad: usize,
    },
    PoolAvg {
        window: usize,
        stride: usize,
        pad: usize,
    },
    Dense {
        width: usize,
    },
    Relu,
    Lrn,
    BatchNorm,
    SoftmaxXent,
    ResidualAdd,
}

fn rand_tensor(rng: &mut Rng, dims: &[usize], lo: f64, hi: f64) -> Tensor {
    let n: usize = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| rng.uniform(lo, hi)).collect())
}

/// Uniform away from zero: |x| in [margin, 1].
fn rand_tensor_off_zero(rng: &mut Rng, dims: &[usize]) -> Tensor {
    let n: usize = dims.iter().product();
    let data = (0..n)
        .map(|_| {
            let mag = rng.uniform(KINK_MARGIN, 1.0);
            if rng.chance(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor::from_vec(dims, data)
}

/// A shuffled grid of distinct values over [-1, 1]. Every pairwise gap is at
/// least 2/n, so max-pool argmaxes cannot flip under the finite-difference
/// step of 1e-5 (shapes stay small enough that 2/n >> 2h).
fn distinct_tensor(rng: &mut Rng, dims: &[usize]) -> Tensor {
    let n: usize = dims.iter().product();
    let mut data: Vec<f64> = (0..n)
        .map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64)
        .collect();
    rng.shuffle(&mut data);
    Tensor::from_vec(dims, data)
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Numerically differentiate `eval` w.r.t. every coordinate of every tensor
/// and return the max relative error against the analytic gradients.
fn compare<F>(tensors: &mut [Tensor], analytic: &[Tensor], eval: F) -> f64
where
    F: Fn(&[Tensor]) -> f64,
{
    assert_eq!(tensors.len(), analytic.len());
    let mut worst = 0.0f64;
    for ti in 0..tensors.len() {
        for i in 0..tensors[ti].len() {
            let orig = tensors[ti].data()[i];
            tensors[ti].data_mut()[i] = orig + H;
            let up = eval(tensors);
            tensors[ti].data_mut()[i] = orig - H;
            let down = eval(tensors);
            tensors[ti].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * H);
            let err = rel_err(analytic[ti].data()[i], numeric);
            if err > worst {
                worst = err;
            }
        }
    }
    worst
}

/// Runs one finite-difference check and returns the max relative error over
/// all inputs and parameters. `input_dims` is (batch, h, w, c) for spatial
/// layers and (batch, features) for dense/softmax targets.
pub fn grad_check(target: CheckTarget, input_dims: &[usize], seed: u64) -> Result<f64, OpError> {
    let mut rng = Rng::new(seed);
    match target {
        CheckTarget::Conv {
            kernel,
            stride,
            pad,
            filters,
        } => {
            let c_in = *input_dims.last().unwrap();
            let mut tensors = vec![
                rand_tensor(&mut rng, input_dims, -1.0, 1.0),
                rand_tensor(&mut rng, &[kernel, kernel, c_in, filters], -1.0, 1.0),
                rand_tensor(&mut rng, &[filters], -0.5, 0.5),
            ];
            let cfg = Conv2dCfg {
                kernel,
                stride,
                pad,
            };
            let probe = conv2d(&tensors[0], &tensors[1], &tensors[2], cfg)?;
            let r = rand_tensor(&mut rng, probe.dims(), -1.0, 1.0);
            let grads = conv2d_backward(&tensors[0], &tensors[1], cfg, &r)?;
            let analytic = vec![grads.input, grads.weight, grads.bias];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                let y = conv2d(&ts[0], &ts[1], &ts[2], cfg).unwrap();
                dot(&y, &rr)
            });
            Ok(max)
        }
        CheckTarget::PoolMax {
            window,
            stride,
            pad,
        } => {
            let cfg = Pool2dCfg {
                window,
                stride,
                pad,
                mode: PoolMode::Max,
            };
            let input = distinct_tensor(&mut rng, input_dims);
            let probe = pool2d(&input, cfg)?;
            let r = rand_tensor(&mut rng, probe.dims(), -1.0, 1.0);
            let analytic = vec![pool2d_backward(&input, cfg, &r)?];
            let mut tensors = vec![input];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                dot(&pool2d(&ts[0], cfg).unwrap(), &rr)
            });
            Ok(max)
        }
        CheckTarget::PoolAvg {
            window,
            stride,
            pad,
        } => {
            let cfg = Pool2dCfg {
                window,
                stride,
                pad,
                mode: PoolMode::Avg,
            };
            let mut tensors = vec![rand_tensor(&mut rng, input_dims, -1.0, 1.0)];
            let probe = pool2d(&tensors[0], cfg)?;
            let r = rand_tensor(&mut rng, probe.dims(), -1.0, 1.0);
            let analytic = vec![pool2d_backward(&tensors[0], cfg, &r)?];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                dot(&pool2d(&ts[0], cfg).unwrap(), &rr)
            });
            Ok(max)
        }
        CheckTarget::Dense { width } => {
            let f: usize = input_dims[1..].iter().product();
            let mut tensors = vec![
                rand_tensor(&mut rng, input_dims, -1.0, 1.0),
                rand_tensor(&mut rng, &[f, width], -1.0, 1.0),
                rand_tensor(&mut rng, &[width], -0.5, 0.5),
            ];
            let r = rand_tensor(&mut rng, &[input_dims[0], width], -1.0, 1.0);
            let grads = dense_backward(&tensors[0], &tensors[1], &r)?;
            let analytic = vec![grads.input, grads.weight, grads.bias];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                dot(&dense(&ts[0], &ts[1], &ts[2]).unwrap(), &rr)
            });
            Ok(max)
        }
        CheckTarget::Relu => {
            let mut tensors = vec![rand_tensor_off_zero(&mut rng, input_dims)];
            let r = rand_tensor(&mut rng, input_dims, -1.0, 1.0);
            let analytic = vec![relu_backward(&tensors[0], &r)?];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| dot(&relu(&ts[0]), &rr));
            Ok(max)
        }
        CheckTarget::Lrn => {
            let p = LrnParams::default();
            let mut tensors = vec![rand_tensor(&mut rng, input_dims, -1.0, 1.0)];
            let r = rand_tensor(&mut rng, input_dims, -1.0, 1.0);
            let analytic = vec![lrn_backward(&tensors[0], &p, &r)?];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                dot(&lrn(&ts[0], &p).unwrap(), &rr)
            });
            Ok(max)
        }
        CheckTarget::BatchNorm => {
            let c = *input_dims.last().unwrap();
            let mut tensors = vec![
                rand_tensor(&mut rng, input_dims, -1.0, 1.0),
                rand_tensor(&mut rng, &[c], 0.5, 1.5),  // gamma
                rand_tensor(&mut rng, &[c], -0.5, 0.5), // beta
            ];
            let r = rand_tensor(&mut rng, input_dims, -1.0, 1.0);
            let state_of = |g: &Tensor, b: &Tensor| {
                let mut st = BnState::new(c);
                st.gamma = g.clone();
                st.beta = b.clone();
                st
            };
            let mut st = state_of(&tensors[1], &tensors[2]);
            let (_, cache) = batchnorm_train(&tensors[0], &mut st)?;
            let grads = batchnorm_backward(&tensors[0], &st, &cache, &r)?;
            let analytic = vec![grads.input, grads.gamma, grads.beta];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                let mut st = state_of(&ts[1], &ts[2]);
                let (y, _) = batchnorm_train(&ts[0], &mut st).unwrap();
                dot(&y, &rr)
            });
            Ok(max)
        }
        CheckTarget::SoftmaxXent => {
            let (n, e) = (input_dims[0], input_dims[1]);
            let mut tensors = vec![rand_tensor(&mut rng, &[n, e], -2.0, 2.0)];
            let labels: Vec<u32> = (0..n).map(|_| rng.below(e) as u32).collect();
            let probs = softmax(&tensors[0])?;
            let analytic = vec![cross_entropy_logits_grad(&probs, &labels)?];
            let ls = labels.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                cross_entropy(&softmax(&ts[0]).unwrap(), &ls).unwrap()
            });
            Ok(max)
        }
        CheckTarget::ResidualAdd => {
            // relu(a + b): the add that closes a shortcut, with its activation
            let a = rand_tensor(&mut rng, input_dims, -1.0, 1.0);
            let mut b = rand_tensor(&mut rng, input_dims, -1.0, 1.0);
            for i in 0..a.len() {
                let mut tries = 0;
                while (a.data()[i] + b.data()[i]).abs() < KINK_MARGIN {
                    b.data_mut()[i] = rng.uniform(-1.0, 1.0);
                    tries += 1;
                    if tries > MAX_RESAMPLES {
                        b.data_mut()[i] = a.data()[i].signum();
                        break;
                    }
                }
            }
            let r = rand_tensor(&mut rng, input_dims, -1.0, 1.0);
            let sum = add(&a, &b);
            let g = relu_backward(&sum, &r)?;
            let analytic = vec![g.clone(), g];
            let mut tensors = vec![a, b];
            let rr = r.clone();
            let max = compare(&mut tensors, &analytic, move |ts| {
                dot(&relu(&add(&ts[0], &ts[1])), &rr)
            });
            Ok(max)
        }
    }
}

fn add(a: &Tensor, b: &Tensor) -> Tensor {
    let mut out = a.clone();
    for (o, &bv) in out.data_mut().iter_mut().zip(b.data()) {
        *o += bv;
    }
    out
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_gradients_match() {
        let err = grad_check(
            CheckTarget::Conv {
                kernel: 3,
                stride: 1,
                pad: 1,
                filters: 3,
            },
            &[1, 4, 4, 2],
            1,
        )
        .unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }

    #[test]
    fn dense_gradients_match() {
        let err = grad_check(CheckTarget::Dense { width: 3 }, &[2, 5], 2).unwrap();
        assert!(err < 1e-7, "max relative error {err}");
    }

    #[test]
    fn softmax_xent_composite_matches() {
        let err = grad_check(CheckTarget::SoftmaxXent, &[3, 5], 3).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }

    #[test]
    fn batchnorm_gradients_match() {
        let err = grad_check(CheckTarget::BatchNorm, &[4, 3, 3, 2], 4).unwrap();
        assert!(err < 1e-5, "max relative error {err}");
    }

    #[test]
    fn lrn_gradients_match() {
        let err = grad_check(CheckTarget::Lrn, &[2, 2, 2, 6], 5).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }

    #[test]
    fn pool_gradients_match() {
        let err = grad_check(
            CheckTarget::PoolMax {
                window: 2,
                stride: 2,
                pad: 0,
            },
            &[1, 4, 4, 2],
            6,
        )
        .unwrap();
        assert!(err < 1e-6, "max pool error {err}");
        let err = grad_check(
            CheckTarget::PoolAvg {
                window: 3,
                stride: 1,
                pad: 1,
            },
            &[1, 4, 4, 2],
            7,
        )
        .unwrap();
        assert!(err < 1e-6, "avg pool error {err}");
    }

    #[test]
    fn residual_add_gradients_match() {
        let err = grad_check(CheckTarget::ResidualAdd, &[2, 3, 3, 2], 8).unwrap();
        assert!(err < 1e-6, "max relative error {err}");
    }
}
