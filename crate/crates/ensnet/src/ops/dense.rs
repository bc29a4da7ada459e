//! Fully connected layer and ReLU.
//!
//! Dense flattens every per-sample trailing dimension, so a (b, h, w, c)
//! feature map feeds a (h*w*c, out) weight matrix directly.

use super::OpError;
use crate::tensor::Tensor;

pub struct DenseGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

pub fn dense(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor, OpError> {
    let b = input.batch();
    let f = input.features();
    let wd = weight.dims();
    if wd.len() != 2 || wd[0] != f {
        return Err(OpError::ShapeMismatch(format!(
            "weight dims {:?} incompatible with {} input features",
            wd, f
        )));
    }
    let out_w = wd[1];
    if bias.dims() != [out_w] {
        return Err(OpError::ShapeMismatch(format!(
            "bias dims {:?}, expected [{out_w}]",
            bias.dims()
        )));
    }
    let x = input.data();
    let wt = weight.data();
    let bs = bias.data();
    let mut out = Tensor::zeros(&[b, out_w]);
    let o = out.data_mut();
    for bi in 0..b {
        let orow = bi * out_w;
        o[orow..orow + out_w].copy_from_slice(bs);
        let xrow = bi * f;
        for fi in 0..f {
            let xv = x[xrow + fi];
            let wrow = fi * out_w;
            for oi in 0..out_w {
                o[orow + oi] += xv * wt[wrow + oi];
            }
        }
    }
    Ok(out)
}

pub fn dense_backward(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
) -> Result<DenseGrads, OpError> {
    let b = input.batch();
    let f = input.features();
    let out_w = weight.dims()[1];
    if grad_out.dims() != [b, out_w] {
        return Err(OpError::ShapeMismatch(format!(
            "grad dims {:?}, expected {:?}",
            grad_out.dims(),
            [b, out_w]
        )));
    }
    let x = input.data();
    let wt = weight.data();
    let go = grad_out.data();
    let mut gx = Tensor::zeros(input.dims());
    let mut gw = Tensor::zeros(weight.dims());
    let mut gb = Tensor::zeros(&[out_w]);
    {
        let gxd = gx.data_mut();
        let gwd = gw.data_mut();
        let gbd = gb.data_mut();
        for bi in 0..b {
            let orow = bi * out_w;
            let xrow = bi * f;
            for oi in 0..out_w {
                gbd[oi] += go[orow + oi];
            }
            for fi in 0..f {
                let wrow = fi * out_w;
                let mut acc = 0.0;
                for oi in 0..out_w {
                    let g = go[orow + oi];
                    acc += g * wt[wrow + oi];
                    gwd[wrow + oi] += g * x[xrow + fi];
                }
                gxd[xrow + fi] = acc;
            }
        }
    }
    Ok(DenseGrads {
        input: gx,
        weight: gw,
        bias: gb,
    })
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor, OpError> {
    if input.dims() != grad_out.dims() {
        return Err(OpError::ShapeMismatch(
            "relu grad dims differ from input".into(),
        ));
    }
    let mut gx = Tensor::zeros(input.dims());
    let gxd = gx.data_mut();
    for (i, (&x, &g)) in input.data().iter().zip(grad_out.data()).enumerate() {
        gxd[i] = if x > 0.0 { g } else { 0.0 };
    }
    Ok(gx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_splits_on_sign() {
        let x = Tensor::from_vec(&[1, 3], vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn identity_weights_zero_bias() {
        let x = Tensor::from_vec(&[2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, -0.25]);
        let mut w = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        let b = Tensor::zeros(&[3]);
        let y = dense(&x, &w, &b).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn flattens_feature_maps() {
        let x = Tensor::from_vec(&[1, 2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]);
        let w = Tensor::from_vec(&[4, 1], vec![1.0, 1.0, 1.0, 1.0]);
        let b = Tensor::from_vec(&[1], vec![0.5]);
        let y = dense(&x, &w, &b).unwrap();
        assert_eq!(y.dims(), &[1, 1]);
        assert_eq!(y.data()[0], 10.5);
    }

    #[test]
    fn rejects_width_mismatch() {
        let x = Tensor::zeros(&[1, 4]);
        let w = Tensor::zeros(&[3, 2]);
        let b = Tensor::zeros(&[2]);
        assert!(dense(&x, &w, &b).is_err());
    }
}
