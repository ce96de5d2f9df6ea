//! Quadrature and bracketing helpers shared by the analysis modules.

use crate::error::{numerical, Result};

/// Composite quadrature rule: `∫ f ≈ Σ weights[i] f(nodes[i])`.
#[derive(Debug, Clone)]
pub(crate) struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Simpson on each segment between consecutive `breaks`, with
    /// an even number of panels per segment and panel width at most
    /// `h_target`. Nodes at interior breaks are pulled inward by a relative
    /// 1e-13 so piecewise integrands are sampled by one-sided values.
    pub fn simpson(breaks: &[f64], h_target: f64) -> Rule {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let last = breaks.len().saturating_sub(1);
        for i in 0..last {
            let (mut lo, mut hi) = (breaks[i], breaks[i + 1]);
            if !(hi > lo) {
                continue;
            }
            if i > 0 {
                lo += 1e-13 * lo.abs().max(1.0);
            }
            if i + 1 < last {
                hi -= 1e-13 * hi.abs().max(1.0);
            }
            if !(hi > lo) {
                continue;
            }
            let mut n = ((hi - lo) / h_target).ceil() as usize;
            n = n.max(2);
            n += n % 2;
            let h = (hi - lo) / n as f64;
            for j in 0..=n {
                let w = if j == 0 || j == n {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                nodes.push(lo + j as f64 * h);
                weights.push(w * h / 3.0);
            }
        }
        Rule { nodes, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| w * f(a))
            .sum()
    }
}

/// Smallest (to ~1e-6 relative) `A ≥ start` with `bound(A) ≤ tol`, for a
/// nonincreasing `bound`. Gives up at `cap`.
pub(crate) fn horizon(bound: impl Fn(f64) -> f64, tol: f64, start: f64, cap: f64) -> Result<f64> {
    let mut hi = start;
    if bound(hi) <= tol {
        return Ok(hi);
    }
    let mut lo = hi;
    while bound(hi) > tol {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Err(numerical(format!(
                "integration horizon exceeds {cap:.3e} for tail tolerance {tol:.1e}"
            )));
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if bound(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Bisection for a root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` have
/// opposite signs. Stops when the bracket is narrower than `x_tol` or
/// `f(mid)` is exactly zero.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(numerical(format!(
            "no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}"
        )));
    }
    let lo_positive = f_lo > 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v.is_nan() {
            return Err(numerical(format!("NaN during bisection at {mid}")));
        }
        if (v > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson with Richardson correction.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        m: f64,
        fm: f64,
        b: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
    }
    if !(b > a) {
        return 0.0;
    }
    // Start from a modest uniform split so narrow features are not missed.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == pieces { b } else { lo + h };
            let m = 0.5 * (lo + hi);
            let (flo, fm, fhi) = (f(lo), f(m), f(hi));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
            step(f, lo, flo, m, fm, hi, fhi, whole, tol / pieces as f64, 30)
        })
        .sum()
}
