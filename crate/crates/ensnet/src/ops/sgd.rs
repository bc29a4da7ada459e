//! Momentum SGD parameter update.

use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdCfg {
    pub lr: f64,
    pub momentum: f64,
}

/// v <- momentum * v - lr * grad;  w <- w + v.
/// Reads the parameter's gradient buffer; the caller zeroes it between steps.
pub fn sgd_step(param: &mut Tensor, velocity: &mut Tensor, cfg: &SgdCfg) {
    assert_eq!(
        param.dims(),
        velocity.dims(),
        "velocity shape differs from parameter"
    );
    assert!(
        param.has_grad(),
        "sgd_step on a parameter with no gradient buffer"
    );
    let n = param.len();
    for i in 0..n {
        let g = param.grad()[i];
        let v = cfg.momentum * velocity.data()[i] - cfg.lr * g;
        velocity.data_mut()[i] = v;
        param.data_mut()[i] += v;
    }
}
