//! Verify every analytic backward pass against central finite differences.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use ensnet::ops::{grad_check, CheckTarget};

fn main() {
    let cases: [(&str, CheckTarget, &[usize]); 9] = [
        (
            "conv 3x3/2",
            CheckTarget::Conv {
                kernel: 3,
                stride: 2,
                pad: 1,
                filters: 3,
            },
            &[2, 5, 5, 2],
        ),
        (
            "max pool",
            CheckTarget::PoolMax {
                window: 2,
                stride: 2,
                pad: 0,
            },
            &[2, 6, 6, 3],
        ),
        (
            "avg pool",
            CheckTarget::PoolAvg {
                window: 3,
                stride: 1,
                pad: 1,
            },
            &[2, 5, 5, 2],
        ),
        ("dense", CheckTarget::Dense { width: 4 }, &[3, 7]),
        ("relu", CheckTarget::Relu, &[2, 4, 4, 3]),
        ("lrn", CheckTarget::Lrn, &[2, 3, 3, 7]),
        ("batch norm", CheckTarget::BatchNorm, &[4, 3, 3, 3]),
        ("softmax+ce", CheckTarget::SoftmaxXent, &[4, 6]),
        ("residual add", CheckTarget::ResidualAdd, &[2, 4, 4, 3]),
    ];
    println!("{:<14} {:>14}  (worst of 5 seeds)", "layer", "max rel err");
    for (name, target, dims) in cases {
        let mut worst = 0.0f64;
        for seed in 0..5 {
            worst = worst.max(grad_check(target, dims, seed).expect("check runs"));
        }
        println!("{name:<14} {worst:>14.3e}");
    }
}
