//! Reference computations that avoid the library's antiderivative collapse:
//! heights come from marching `x′(a) = g(b e^{-μa}/μ)` with RK4.

#![allow(dead_code)]

use num_complex::Complex64;

pub struct Family {
    pub alpha: f64,
    pub p: f64,
}

impl Family {
    pub fn beta(&self, x: f64) -> f64 {
        self.alpha * x * (-x).exp()
    }
    pub fn beta_prime(&self, x: f64) -> f64 {
        self.alpha * (-x).exp() * (1.0 - x)
    }
    pub fn g(&self, x: f64) -> f64 {
        self.p * (-x).exp()
    }
    pub fn g_prime(&self, x: f64) -> f64 {
        -self.p * (-x).exp()
    }
}

/// μ = 1, x_m = 0 throughout.
const STEP: f64 = 2e-3;
const HORIZON: f64 = 45.0;

/// Heights at ages `k·STEP` by RK4; the right-hand side depends on `a` only.
fn heights(f: &Family, b: f64) -> Vec<f64> {
    let n = (HORIZON / STEP) as usize;
    let rhs = |a: f64| f.g(b * (-a).exp());
    let mut x = vec![0.0; n + 1];
    for k in 0..n {
        let a = k as f64 * STEP;
        x[k + 1] = x[k] + STEP / 6.0 * (rhs(a) + 4.0 * rhs(a + 0.5 * STEP) + rhs(a + STEP));
    }
    x
}

fn simpson(values: &[Complex64], h: f64) -> Complex64 {
    let n = values.len() - 1;
    assert!(n % 2 == 0);
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub fn height(f: &Family, b: f64, a: f64) -> f64 {
    let n = 2 * ((a / 1e-3).ceil() as usize).max(1);
    let h = a / n as f64;
    let v: Vec<Complex64> = (0..=n)
        .map(|i| Complex64::new(f.g(b * (-(i as f64) * h).exp()), 0.0))
        .collect();
    simpson(&v, h).re
}

pub fn reproduction_r(f: &Family, b: f64) -> f64 {
    let x = heights(f, b);
    let v: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(k, &xk)| Complex64::new(f.beta(xk) * (-(k as f64) * STEP).exp(), 0.0))
        .collect();
    simpson(&v, STEP).re
}

pub fn chi(f: &Family, b: f64, lambda: Complex64) -> Complex64 {
    let x = heights(f, b);
    let top = f.g(b);
    let v: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let a = k as f64 * STEP;
            (-(1.0 + lambda) * a).exp() * (top * f.beta_prime(xk))
        })
        .collect();
    simpson(&v, STEP)
}

pub fn xi(f: &Family, b: f64, lambda: Complex64) -> Complex64 {
    let x = heights(f, b);
    let top = f.g(b);
    let v: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let a = k as f64 * STEP;
            let theta = (-a).exp() * b;
            let g = f.g(theta);
            let bracket = Complex64::new(1.0, 0.0) - theta * f.g_prime(theta) / ((1.0 + lambda) * g);
            (-(1.0 + lambda) * a).exp() * bracket * (top * f.beta(xk) / g)
        })
        .collect();
    simpson(&v, STEP)
}

/// Midpoint-rule `ξ_b` on the real axis, for an independent root.
pub fn xi_midpoint(f: &Family, b: f64, lambda: f64) -> f64 {
    let h = STEP / 8.0;
    let n = (HORIZON / h) as usize;
    let top = f.g(b);
    let mut x = 0.0;
    let mut sum = 0.0;
    let rhs = |a: f64| f.g(b * (-a).exp());
    for k in 0..n {
        let a0 = k as f64 * h;
        // Height at the midpoint by one RK4 half step from a0.
        let half = 0.5 * h;
        let xm = x + half / 6.0 * (rhs(a0) + 4.0 * rhs(a0 + 0.5 * half) + rhs(a0 + half));
        let am = a0 + half;
        let theta = (-am).exp() * b;
        let g = f.g(theta);
        sum += (-(1.0 + lambda) * am).exp() * top * f.beta(xm) / g
            * (1.0 - theta * f.g_prime(theta) / ((1.0 + lambda) * g));
        x += h / 6.0 * (rhs(a0) + 4.0 * rhs(am) + rhs(a0 + h));
    }
    sum * h
}

pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}
