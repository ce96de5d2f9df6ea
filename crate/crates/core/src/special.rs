//! Exponential integral E1.
//!
//! `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`. The power series (with the
//! `-γ - ln x` head) is used on `(0, 1]` and a modified Lentz evaluation of
//! the continued fraction on `(1, ∞)`.

use crate::error::{domain, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const MAX_ITER: usize = 500;
const TINY: f64 = 1.0e-300;

/// Exponential integral `E1(x)` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("E1 requires x > 0, got {x}")));
    }
    Ok(e1(x))
}

/// `e^x E1(x)`, finite for all `x > 0` (behaves like `1/x` for large `x`).
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("E1 requires x > 0, got {x}")));
    }
    Ok(e1_scaled(x))
}

pub(crate) fn e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x.is_infinite() {
        0.0
    } else if x <= 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * e1_cf_scaled(x)
    }
}

pub(crate) fn e1_scaled(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x.is_infinite() {
        0.0
    } else if x <= 1.0 {
        x.exp() * e1_series(x)
    } else {
        e1_cf_scaled(x)
    }
}

fn e1_series(x: f64) -> f64 {
    // sum_{k>=1} (-1)^{k+1} x^k / (k k!)
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        fact *= -x / kf;
        let term = -fact / kf;
        sum += term;
        if term.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// `e^x E1(x)` via the continued fraction 1/(x+1- 1/(x+3- 4/(x+5- ...))).
fn e1_cf_scaled(x: f64) -> f64 {
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}
