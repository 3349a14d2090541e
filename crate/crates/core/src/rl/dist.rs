//! Tanh-squashed diagonal Gaussian over one pre-squash variable `u`.
//! The throttle is `(tanh(u) + 1) / 2`.

use std::f64::consts::PI;

pub fn squash(u: f64) -> f64 {
    0.5 * (u.tanh() + 1.0)
}

pub fn gaussian_log_prob(u: f64, mean: f64, log_std: f64) -> f64 {
    let z = (u - mean) * (-log_std).exp();
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

/// Log density of the squashed throttle, including the change of variables.
pub fn squashed_log_prob(u: f64, mean: f64, log_std: f64) -> f64 {
    let t = u.tanh();
    gaussian_log_prob(u, mean, log_std) - (0.5 * (1.0 - t * t) + 1e-12).ln()
}

/// Entropy of the pre-squash Gaussian.
pub fn gaussian_entropy(log_std: f64) -> f64 {
    0.5 + 0.5 * (2.0 * PI).ln() + log_std
}

const QUAD_NODES: usize = 96;
const QUAD_HALF_WIDTH: f64 = 6.0;

/// `ln(1 - tanh²u)` without cancellation for large |u|.
fn log_sech2(u: f64) -> f64 {
    let a = u.abs();
    2.0 * (std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p())
}

/// Entropy of the throttle distribution and its partial derivatives with
/// respect to the pre-squash mean and log-std.
///
/// The expectation over the standard normal is a midpoint rule on
/// `[-6, 6]` with renormalized weights, so the result is deterministic.
pub fn squashed_entropy(mean: f64, log_std: f64) -> (f64, f64, f64) {
    let sd = log_std.exp();
    let h = 2.0 * QUAD_HALF_WIDTH / QUAD_NODES as f64;
    let (mut wsum, mut e, mut d_mean, mut d_ls) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..QUAD_NODES {
        let z = -QUAD_HALF_WIDTH + (k as f64 + 0.5) * h;
        let w = (-0.5 * z * z).exp();
        let u = mean + sd * z;
        let df = -2.0 * u.tanh();
        wsum += w;
        e += w * log_sech2(u);
        d_mean += w * df;
        d_ls += w * df * sd * z;
    }
    let ent = gaussian_entropy(log_std) + e / wsum - std::f64::consts::LN_2;
    (ent, d_mean / wsum, 1.0 + d_ls / wsum)
}
