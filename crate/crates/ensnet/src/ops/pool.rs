//! Max and average pooling.
//!
//! Padding contributes -inf cells to max pooling (never selected) and zero
//! cells to average pooling, whose divisor is always the full window area.
//! Max pooling routes its gradient to the first maximum in scan order.

use super::{out_side, OpError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    Max,
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pool2dCfg {
    pub window: usize,
    pub stride: usize,
    pub pad: usize,
    pub mode: PoolMode,
}

pub fn pool2d(input: &Tensor, cfg: Pool2dCfg) -> Result<Tensor, OpError> {
    let (b, h, w, c) = input.dims4();
    let oh = out_side(h, cfg.window, cfg.stride, cfg.pad)?;
    let ow = out_side(w, cfg.window, cfg.stride, cfg.pad)?;
    let x = input.data();
    let mut out = Tensor::zeros(&[b, oh, ow, c]);
    let o = out.data_mut();
    let area = (cfg.window * cfg.window) as f64;
    for bi in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let obase = ((bi * oh + oy) * ow + ox) * c;
                for ci in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut sum = 0.0;
                    for ky in 0..cfg.window {
                        let iy = (oy * cfg.stride + ky) as isize - cfg.pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..cfg.window {
                            let ix = (ox * cfg.stride + kx) as isize - cfg.pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let v = x[((bi * h + iy as usize) * w + ix as usize) * c + ci];
                            if v > best {
                                best = v;
                            }
                            sum += v;
                        }
                    }
                    o[obase + ci] = match cfg.mode {
                        PoolMode::Max => best,
                        PoolMode::Avg => sum / area,
                    };
                }
            }
        }
    }
    Ok(out)
}

pub fn pool2d_backward(
    input: &Tensor,
    cfg: Pool2dCfg,
    grad_out: &Tensor,
) -> Result<Tensor, OpError> {
    let (b, h, w, c) = input.dims4();
    let oh = out_side(h, cfg.window, cfg.stride, cfg.pad)?;
    let ow = out_side(w, cfg.window, cfg.stride, cfg.pad)?;
    if grad_out.dims() != [b, oh, ow, c] {
        return Err(OpError::ShapeMismatch(format!(
            "grad dims {:?}, expected {:?}",
            grad_out.dims(),
            [b, oh, ow, c]
        )));
    }
    let x = input.data();
    let go = grad_out.data();
    let mut gx = Tensor::zeros(input.dims());
    let gxd = gx.data_mut();
    let area = (cfg.window * cfg.window) as f64;
    for bi in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let obase = ((bi * oh + oy) * ow + ox) * c;
                for ci in 0..c {
                    let g = go[obase + ci];
                    match cfg.mode {
                        PoolMode::Max => {
                            let mut best = f64::NEG_INFINITY;
                            let mut best_idx = None;
                            for ky in 0..cfg.window {
                                let iy = (oy * cfg.stride + ky) as isize - cfg.pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..cfg.window {
                                    let ix = (ox * cfg.stride + kx) as isize - cfg.pad as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let idx = ((bi * h + iy as usize) * w + ix as usize) * c + ci;
                                    // strict > keeps the first maximum in scan order
                                    if x[idx] > best {
                                        best = x[idx];
                                        best_idx = Some(idx);
                                    }
                                }
                            }
                            if let Some(idx) = best_idx {
                                gxd[idx] += g;
                            }
                        }
                        PoolMode::Avg => {
                            let share = g / area;
                            for ky in 0..cfg.window {
                                let iy = (oy * cfg.stride + ky) as isize - cfg.pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..cfg.window {
                                    let ix = (ox * cfg.stride + kx) as isize - cfg.pad as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    gxd[((bi * h + iy as usize) * w + ix as usize) * c + ci] +=
                                        share;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(gx)
}
