//! 2-D convolution (cross-correlation with bias) and its backward pass.
//!
//! Input is (batch, h, w, c_in), weights are (k, k, c_in, q), bias is (q),
//! output is (batch, oh, ow, q). Padding is zero-padding on both sides.

use super::{out_side, OpError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dCfg {
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

pub struct ConvGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

fn check_shapes(
    input: &Tensor,
    weight: &Tensor,
    cfg: Conv2dCfg,
) -> Result<(usize, usize), OpError> {
    let (_, h, w, c_in) = input.dims4();
    let wd = weight.dims();
    if wd.len() != 4 || wd[0] != cfg.kernel || wd[1] != cfg.kernel || wd[2] != c_in {
        return Err(OpError::ShapeMismatch(format!(
            "weight dims {:?} incompatible with kernel {} over {} input channels",
            wd, cfg.kernel, c_in
        )));
    }
    let oh = out_side(h, cfg.kernel, cfg.stride, cfg.pad)?;
    let ow = out_side(w, cfg.kernel, cfg.stride, cfg.pad)?;
    Ok((oh, ow))
}

pub fn conv2d(
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    cfg: Conv2dCfg,
) -> Result<Tensor, OpError> {
    let (b, h, w, c_in) = input.dims4();
    let (oh, ow) = check_shapes(input, weight, cfg)?;
    let q = weight.dims()[3];
    if bias.dims() != [q] {
        return Err(OpError::ShapeMismatch(format!(
            "bias dims {:?}, expected [{q}]",
            bias.dims()
        )));
    }
    let k = cfg.kernel;
    let x = input.data();
    let wt = weight.data();
    let bs = bias.data();
    let mut out = Tensor::zeros(&[b, oh, ow, q]);
    let o = out.data_mut();
    let mut acc = vec![0.0f64; q];
    for bi in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                acc.copy_from_slice(bs);
                for ky in 0..k {
                    let iy = (oy * cfg.stride + ky) as isize - cfg.pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let ix = (ox * cfg.stride + kx) as isize - cfg.pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let xbase = ((bi * h + iy as usize) * w + ix as usize) * c_in;
                        let wbase = ((ky * k + kx) * c_in) * q;
                        for ci in 0..c_in {
                            let xv = x[xbase + ci];
                            let wrow = wbase + ci * q;
                            for qi in 0..q {
                                acc[qi] += xv * wt[wrow + qi];
                            }
                        }
                    }
                }
                let obase = ((bi * oh + oy) * ow + ox) * q;
                o[obase..obase + q].copy_from_slice(&acc);
            }
        }
    }
    Ok(out)
}

pub fn conv2d_backward(
    input: &Tensor,
    weight: &Tensor,
    cfg: Conv2dCfg,
    grad_out: &Tensor,
) -> Result<ConvGrads, OpError> {
    let (b, h, w, c_in) = input.dims4();
    let (oh, ow) = check_shapes(input, weight, cfg)?;
    let q = weight.dims()[3];
    if grad_out.dims() != [b, oh, ow, q] {
        return Err(OpError::ShapeMismatch(format!(
            "grad dims {:?}, expected {:?}",
            grad_out.dims(),
            [b, oh, ow, q]
        )));
    }
    let k = cfg.kernel;
    let x = input.data();
    let wt = weight.data();
    let go = grad_out.data();
    let mut gx = Tensor::zeros(input.dims());
    let mut gw = Tensor::zeros(weight.dims());
    let mut gb = Tensor::zeros(&[q]);
    {
        let gxd = gx.data_mut();
        for bi in 0..b {
            for oy in 0..oh {
                for ox in 0..ow {
                    let obase = ((bi * oh + oy) * ow + ox) * q;
                    for ky in 0..k {
                        let iy = (oy * cfg.stride + ky) as isize - cfg.pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * cfg.stride + kx) as isize - cfg.pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let xbase = ((bi * h + iy as usize) * w + ix as usize) * c_in;
                            let wbase = ((ky * k + kx) * c_in) * q;
                            for ci in 0..c_in {
                                let wrow = wbase + ci * q;
                                let mut acc = 0.0;
                                for qi in 0..q {
                                    acc += go[obase + qi] * wt[wrow + qi];
                                }
                                gxd[xbase + ci] += acc;
                            }
                        }
                    }
                }
            }
        }
    }
    {
        let gwd = gw.data_mut();
        let gbd = gb.data_mut();
        for bi in 0..b {
            for oy in 0..oh {
                for ox in 0..ow {
                    let obase = ((bi * oh + oy) * ow + ox) * q;
                    for qi in 0..q {
                        gbd[qi] += go[obase + qi];
                    }
                    for ky in 0..k {
                        let iy = (oy * cfg.stride + ky) as isize - cfg.pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * cfg.stride + kx) as isize - cfg.pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let xbase = ((bi * h + iy as usize) * w + ix as usize) * c_in;
                            let wbase = ((ky * k + kx) * c_in) * q;
                            for ci in 0..c_in {
                                let xv = x[xbase + ci];
                                let wrow = wbase + ci * q;
                                for qi in 0..q {
                                    gwd[wrow + qi] += xv * go[obase + qi];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: gx,
        weight: gw,
        bias: gb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    // Independent oracle: direct sliding-window sum, written with none of the
    // indexing shortcuts of the implementation above.
    #[allow(clippy::too_many_arguments)]
    fn conv_oracle(
        x: &[f64],
        (b, h, w, c): (usize, usize, usize, usize),
        wt: &[f64],
        bias: &[f64],
        k: usize,
        s: usize,
        p: usize,
        q: usize,
    ) -> Vec<f64> {
        let oh = (h + 2 * p - k) / s + 1;
        let ow = (w + 2 * p - k) / s + 1;
        let mut out = vec![0.0; b * oh * ow * q];
        for bi in 0..b {
            for oy in 0..oh {
                for ox in 0..ow {
                    for qi in 0..q {
                        let mut acc = bias[qi];
                        for ky in 0..k {
                            for kx in 0..k {
                                for ci in 0..c {
                                    let iy = oy as isize * s as isize + ky as isize - p as isize;
                                    let ix = ox as isize * s as isize + kx as isize - p as isize;
                                    if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                                        let xv =
                                            x[((bi * h + iy as usize) * w + ix as usize) * c + ci];
                                        let wv = wt[((ky * k + kx) * c + ci) * q + qi];
                                        acc += xv * wv;
                                    }
                                }
                            }
                        }
                        out[((bi * oh + oy) * ow + ox) * q + qi] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn all_ones_window_sums() {
        let input = Tensor::filled(&[1, 3, 3, 1], 1.0);
        let weight = Tensor::filled(&[2, 2, 1, 1], 1.0);
        let bias = Tensor::zeros(&[1]);
        let out = conv2d(
            &input,
            &weight,
            &bias,
            Conv2dCfg {
                kernel: 2,
                stride: 1,
                pad: 0,
            },
        )
        .unwrap();
        assert_eq!(out.dims(), &[1, 2, 2, 1]);
        assert!(out.data().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn identity_kernel_copies_input() {
        let mut rng = Rng::new(5);
        let data: Vec<f64> = (0..16).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let input = Tensor::from_vec(&[1, 4, 4, 1], data.clone());
        let weight = Tensor::filled(&[1, 1, 1, 1], 1.0);
        let bias = Tensor::zeros(&[1]);
        let out = conv2d(
            &input,
            &weight,
            &bias,
            Conv2dCfg {
                kernel: 1,
                stride: 1,
                pad: 0,
            },
        )
        .unwrap();
        assert_eq!(out.data(), &data[..]);
    }

    #[test]
    fn matches_sliding_window_oracle() {
        let mut rng = Rng::new(42);
        let (b, h, w, c, k, s, p, q) = (1, 5, 5, 2, 3, 2, 1, 3);
        let x: Vec<f64> = (0..b * h * w * c).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let wt: Vec<f64> = (0..k * k * c * q).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let bs: Vec<f64> = (0..q).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let input = Tensor::from_vec(&[b, h, w, c], x.clone());
        let weight = Tensor::from_vec(&[k, k, c, q], wt.clone());
        let bias = Tensor::from_vec(&[q], bs.clone());
        let out = conv2d(
            &input,
            &weight,
            &bias,
            Conv2dCfg {
                kernel: k,
                stride: s,
                pad: p,
            },
        )
        .unwrap();
        let expect = conv_oracle(&x, (b, h, w, c), &wt, &bs, k, s, p, q);
        assert_eq!(out.len(), expect.len());
        for (a, e) in out.data().iter().zip(&expect) {
            assert!((a - e).abs() <= 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn randomized_small_shapes_match_oracle() {
        let mut rng = Rng::new(2024);
        for case in 0..100 {
            let h = 1 + rng.below(7);
            let w = 1 + rng.below(7);
            let c = 1 + rng.below(3);
            let k = 1 + rng.below(3.min(h.min(w)));
            let s = 1 + rng.below(2);
            let p = rng.below(2);
            let q = 1 + rng.below(3);
            let b = 1 + rng.below(2);
            if h + 2 * p < k || w + 2 * p < k {
                continue;
            }
            let x: Vec<f64> = (0..b * h * w * c).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let wt: Vec<f64> = (0..k * k * c * q).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let bs: Vec<f64> = (0..q).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let out = conv2d(
                &Tensor::from_vec(&[b, h, w, c], x.clone()),
                &Tensor::from_vec(&[k, k, c, q], wt.clone()),
                &Tensor::from_vec(&[q], bs.clone()),
                Conv2dCfg {
                    kernel: k,
                    stride: s,
                    pad: p,
                },
            )
            .unwrap();
            let expect = conv_oracle(&x, (b, h, w, c), &wt, &bs, k, s, p, q);
            for (a, e) in out.data().iter().zip(&expect) {
                assert!((a - e).abs() <= 1e-12, "case {case}: {a} vs {e}");
            }
        }
    }

    #[test]
    fn linear_in_input_when_bias_is_zero() {
        let mut rng = Rng::new(9);
        let x: Vec<f64> = (0..18).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let wt: Vec<f64> = (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let cfg = Conv2dCfg {
            kernel: 2,
            stride: 1,
            pad: 0,
        };
        let weight = Tensor::from_vec(&[2, 2, 2, 1], wt);
        let bias = Tensor::zeros(&[1]);
        let a = 3.5;
        let y1 = conv2d(
            &Tensor::from_vec(&[1, 3, 3, 2], x.clone()),
            &weight,
            &bias,
            cfg,
        )
        .unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        let y2 = conv2d(
            &Tensor::from_vec(&[1, 3, 3, 2], scaled),
            &weight,
            &bias,
            cfg,
        )
        .unwrap();
        for (v1, v2) in y1.data().iter().zip(y2.data()) {
            assert!((a * v1 - v2).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_channel_mismatch() {
        let input = Tensor::zeros(&[1, 4, 4, 3]);
        let weight = Tensor::zeros(&[2, 2, 2, 1]);
        let bias = Tensor::zeros(&[1]);
        let err = conv2d(
            &input,
            &weight,
            &bias,
            Conv2dCfg {
                kernel: 2,
                stride: 1,
                pad: 0,
            },
        );
        assert!(err.is_err());
    }
}
