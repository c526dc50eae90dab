//! Small numerical kernels shared by the loss and optimizer code.

use std::f64::consts::LN_2;

/// `log(1 - exp(-z))` for `z > 0`, accurate both near zero and for large `z`.
pub fn log1mexp(z: f64) -> f64 {
    if z < LN_2 {
        (-(-z).exp_m1()).ln()
    } else {
        (-(-z).exp()).ln_1p()
    }
}

/// `exp(-z) / (1 - exp(-z))`, the odds ratio appearing in the likelihood
/// derivatives.
pub fn inv_expm1(z: f64) -> f64 {
    1.0 / z.exp_m1()
}

/// Pairwise (cascade) summation with a fixed reduction tree, so results do not
/// depend on how the terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
