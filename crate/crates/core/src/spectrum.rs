//! Characteristic equation of the linearization at an equilibrium.
//!
//! Exponential perturbations `e^{λt}` of an equilibrium `b` satisfy
//!
//! ```text
//! λ + μ - β(x_m) = χ_b(λ),   χ_b(λ) = g(b/μ) ∫_0^∞ β′(x(b, a)) e^{-(μ+λ)a} da,
//! ```
//!
//! or equivalently `ξ_b(λ) = 1` with
//!
//! ```text
//! ξ_b(λ) = g(b/μ) ∫_0^∞ β(x(b, a)) e^{-(μ+λ)a}/g(θ) [1 - μθ g′(θ)/((μ+λ) g(θ))] da,
//! θ = e^{-μa} b/μ,
//! ```
//!
//! related by `(μ+λ) ξ_b(λ) = χ_b(λ) + β(x_m)`. On `(-μ, ∞)` the real
//! function `ξ_b` decreases strictly from `+∞` to `0`, so the real root `λ₀`
//! is unique, it dominates every complex root, and `ξ_b(0) = F′(b)` fixes
//! its sign.

use num_complex::Complex64;
use serde::Serialize;

use crate::equilibria::Verdict;
use crate::error::{domain, numerical, Error, Result};
use crate::quadrature::Rule;
use crate::Model;

const MAX_NODES: usize = 1 << 22;
const MAX_CONTOUR_POINTS: usize = 200_000;

/// Axis-aligned rectangle `[re_min, re_max] × [-im_max, im_max]`, always
/// symmetric about the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_max: f64) -> Self {
        Self { re_min, re_max, im_max }
    }

    fn inflated(&self, mu: f64, delta: f64) -> Self {
        let width = self.re_max - self.re_min;
        Self {
            re_min: (self.re_min - 0.01 * width).max(-mu + 2.0 * delta),
            re_max: self.re_max + 0.01 * width,
            im_max: self.im_max * 1.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumTolerances {
    pub tol_eq: f64,
    pub tol_tail: f64,
    pub tol_crit: f64,
    pub delta: f64,
    pub root_residual: f64,
}

/// Dominant root, `ξ_b(0)` and a certified count of roots in the closed
/// right half of a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub b: f64,
    /// `|R(b) - 1|` for `b > 0`; zero for the trivial equilibrium.
    pub r_residual: f64,
    /// Dominant real root; `None` when no root lies right of `-μ + δ`
    /// (possible only at `b = 0`).
    pub lambda0: Option<f64>,
    pub xi_at_zero: f64,
    pub f_prime: f64,
    pub verdict: Verdict,
    /// Roots of the characteristic equation inside `rectangle`; `None` when
    /// the count is inconclusive.
    pub unstable_count: Option<u32>,
    pub inconclusive: Option<String>,
    pub rectangle: Rectangle,
    pub tolerances: SpectrumTolerances,
}

/// `χ_b`, `ξ_b` and `χ_b′` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub chi: Complex64,
    pub xi: Complex64,
    pub chi_prime: Complex64,
}

#[derive(Debug, Clone, Default)]
struct Kernel {
    ages: Vec<f64>,
    /// weight · g(b/μ) β′(x)
    chi: Vec<f64>,
    /// weight · g(b/μ) β(x)/g(θ)
    xi0: Vec<f64>,
    /// weight · (-g(b/μ) β(x) μ θ g′(θ)/g(θ)²); multiplies 1/(μ+λ).
    xi1: Vec<f64>,
}

impl Kernel {
    fn push_rule(&mut self, model: &Model, b: f64, rule: &Rule) {
        let p = &model.params;
        let mu = p.mu();
        let g_top = p.g().at(b / mu);
        for (&a, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = p.height(b, a);
            let theta = (-mu * a).exp() * b / mu;
            let g = p.g().at(theta);
            let beta = p.beta().at(x);
            self.ages.push(a);
            self.chi.push(w * g_top * p.beta().prime_at(x));
            self.xi0.push(w * g_top * beta / g);
            self.xi1.push(-w * g_top * beta * mu * theta * p.g().prime_at(theta) / (g * g));
        }
    }

    fn evaluate(&self, mu: f64, lambda: Complex64) -> Evaluation {
        let rate = Complex64::new(mu, 0.0) + lambda;
        let inv_rate = rate.inv();
        let mut chi = Complex64::new(0.0, 0.0);
        let mut xi = Complex64::new(0.0, 0.0);
        let mut chi_prime = Complex64::new(0.0, 0.0);
        for i in 0..self.ages.len() {
            let a = self.ages[i];
            let e = (-rate * a).exp();
            chi += e * self.chi[i];
            chi_prime -= e * (a * self.chi[i]);
            xi += e * (inv_rate * self.xi1[i] + self.xi0[i]);
        }
        Evaluation { chi, xi, chi_prime }
    }
}

/// The characteristic functions `χ_b` and `ξ_b` at a fixed birth rate `b`.
///
/// Kernel values on the age grid are computed once; each evaluation is then
/// a weighted exponential sum. Points needing a longer horizon (`Re λ` close
/// to `-μ`) or a finer grid (large `|Im λ|`) get extra nodes on demand.
#[derive(Debug, Clone)]
pub struct CharacteristicFunction<'m> {
    model: &'m Model,
    b: f64,
    base: Kernel,
    a_base: f64,
    h_base: f64,
    c_base: f64,
}

impl Model {
    pub fn characteristic(&self, b: f64) -> Result<CharacteristicFunction<'_>> {
        CharacteristicFunction::new(self, b)
    }

    /// Characteristic analysis of an equilibrium `b`; fails if the root count
    /// is inconclusive.
    pub fn stability_report(&self, b: f64) -> Result<SpectrumReport> {
        let report = self.stability_report_partial(b)?;
        match &report.inconclusive {
            Some(msg) => Err(Error::Inconclusive(msg.clone())),
            None => Ok(report),
        }
    }

    /// Like [`Model::stability_report`], but an inconclusive count leaves
    /// `unstable_count` empty instead of failing.
    pub fn stability_report_partial(&self, b: f64) -> Result<SpectrumReport> {
        self.stability_report_in(b, None)
    }

    /// Partial report with the counting rectangle given explicitly; `None`
    /// picks `(-1e-6, max(5μ, 2λ₀ + 1)) × (-50μ, 50μ)`.
    pub fn stability_report_in(&self, b: f64, rect: Option<Rectangle>) -> Result<SpectrumReport> {
        let mu = self.params.mu();
        let chf = self.characteristic(b)?;
        let lambda0 = chf.real_root()?;
        let xi_at_zero = chf.xi(Complex64::new(0.0, 0.0))?.re;
        let f_prime = self.f_prime(b)?;
        let r_residual = if b > 0.0 { (self.reproduction_r(b)? - 1.0).abs() } else { 0.0 };
        let rect = rect.unwrap_or_else(|| {
            Rectangle::new(-1e-6, (5.0 * mu).max(2.0 * lambda0.unwrap_or(-mu) + 1.0), 50.0 * mu)
        });
        let (unstable_count, inconclusive, rectangle) = match chf.count_roots(rect) {
            Ok((n, used)) => (Some(n), None, used),
            Err(Error::Inconclusive(msg)) => (None, Some(msg), rect),
            Err(e) => return Err(e),
        };
        Ok(SpectrumReport {
            b,
            r_residual,
            lambda0,
            xi_at_zero,
            f_prime,
            verdict: self.classify(f_prime),
            unstable_count,
            inconclusive,
            rectangle,
            tolerances: SpectrumTolerances {
                tol_eq: self.numerics.tol_eq,
                tol_tail: self.numerics.tol_tail,
                tol_crit: self.numerics.tol_crit,
                delta: self.numerics.delta,
                root_residual: 1e-10,
            },
        })
    }
}

impl<'m> CharacteristicFunction<'m> {
    pub fn new(model: &'m Model, b: f64) -> Result<Self> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(domain(format!("birth rate must be ≥ 0, got {b}")));
        }
        let mu = model.params.mu();
        let c_base = 0.5 * mu;
        let a_base = model.xi_horizon(b, c_base)?;
        let a_ref = model.xi_horizon(b, mu)?;
        let h_base = a_ref / model.numerics.panels as f64;
        let rule = Rule::simpson(&model.age_breaks(b, a_base), h_base);
        let mut base = Kernel::default();
        base.push_rule(model, b, &rule);
        Ok(Self {
            model,
            b,
            base,
            a_base,
            h_base,
            c_base,
        })
    }

    pub fn birth_rate(&self) -> f64 {
        self.b
    }

    fn mu(&self) -> f64 {
        self.model.params.mu()
    }

    fn min_rate(&self) -> f64 {
        self.model.numerics.delta * self.mu()
    }

    /// `χ_b`, `ξ_b` and `χ_b′` at `λ`, `Re λ > -μ + δ`.
    pub fn evaluate(&self, lambda: Complex64) -> Result<Evaluation> {
        let mu = self.mu();
        let c = mu + lambda.re;
        if !(c > self.min_rate()) || !lambda.im.is_finite() {
            return Err(domain(format!(
                "characteristic functions need Re λ > -μ + δ = {}, got {lambda}",
                -mu + self.min_rate()
            )));
        }
        let omega = lambda.im.abs();
        let h_osc = if omega > 0.0 { 0.03 / omega } else { f64::INFINITY };
        if c >= self.c_base && self.h_base <= h_osc {
            return Ok(self.base.evaluate(mu, lambda));
        }
        let a_end = self.model.xi_horizon(self.b, c)?.max(self.a_base);
        if self.h_base <= h_osc {
            // Base grid plus a coarser extension for the slow tail.
            let h_ext = (0.05 / c).min(8.0 * self.h_base).min(h_osc).max(self.h_base);
            let extra = self.extension(self.a_base, a_end, h_ext)?;
            let mut total = self.base.evaluate(mu, lambda);
            let tail = extra.evaluate(mu, lambda);
            total.chi += tail.chi;
            total.xi += tail.xi;
            total.chi_prime += tail.chi_prime;
            Ok(total)
        } else {
            let kernel = self.extension(0.0, a_end, h_osc)?;
            Ok(kernel.evaluate(mu, lambda))
        }
    }

    fn extension(&self, from: f64, to: f64, h: f64) -> Result<Kernel> {
        let mut kernel = Kernel::default();
        if to <= from {
            return Ok(kernel);
        }
        if (to - from) / h > MAX_NODES as f64 {
            return Err(numerical(format!(
                "characteristic quadrature on [{from}, {to}] with step {h:.2e} exceeds the node budget"
            )));
        }
        let mut breaks: Vec<f64> = self
            .model
            .age_breaks(self.b, to)
            .into_iter()
            .filter(|&a| a > from)
            .collect();
        breaks.insert(0, from);
        let rule = Rule::simpson(&breaks, h);
        kernel.push_rule(self.model, self.b, &rule);
        Ok(kernel)
    }

    pub fn chi(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(lambda)?.chi)
    }

    pub fn xi(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(lambda)?.xi)
    }

    /// `Δ(z) = z + μ - β(x_m) - χ_b(z)`, whose zeros are the characteristic roots.
    pub fn delta_fn(&self, z: Complex64) -> Result<Complex64> {
        let e = self.evaluate(z)?;
        Ok(z + self.mu() - self.model.params.beta_at_xm() - e.chi)
    }

    fn xi_real(&self, lambda: f64) -> Result<f64> {
        Ok(self.xi(Complex64::new(lambda, 0.0))?.re)
    }

    /// The unique real root `λ₀ > -μ` of `ξ_b(λ) = 1`, by bisection.
    ///
    /// Fails when `ξ_b(-μ + δ) ≤ 1`, which can only happen at `b = 0`; see
    /// [`CharacteristicFunction::real_root`].
    pub fn dominant_real_root(&self) -> Result<f64> {
        self.real_root()?.ok_or_else(|| {
            numerical(format!(
                "no real characteristic root above -μ + δ at b = {}: ξ_b(-μ + δ) ≤ 1",
                self.b
            ))
        })
    }

    /// Like [`CharacteristicFunction::dominant_real_root`], but `None` when
    /// `ξ_b(-μ + δ) ≤ 1`. For `b > 0`, `ξ_b(-μ⁺) = +∞`; at `b = 0` the
    /// limit is `∫_{x_m}^∞ β/g(0)`, which may be below 1. Then
    /// `|ξ_b(λ)| ≤ ξ_b(Re λ) < 1` rules out every root with `Re λ > -μ + δ`.
    pub fn real_root(&self) -> Result<Option<f64>> {
        let mu = self.mu();
        let floor = -mu + self.min_rate();
        let excess = |l: f64| self.xi_real(l).map(|v| v - 1.0);

        let (mut lo, mut hi);
        if excess(0.0)? < 0.0 {
            hi = 0.0;
            let mut c = 0.5 * mu;
            loop {
                let l = -mu + c;
                if l <= floor {
                    if excess(floor)? > 0.0 {
                        lo = floor;
                        break;
                    }
                    return Ok(None);
                }
                if excess(l)? > 0.0 {
                    lo = l;
                    break;
                }
                hi = l;
                c *= 0.25;
            }
        } else {
            lo = 0.0;
            hi = mu;
            while excess(hi)? >= 0.0 {
                lo = hi;
                hi *= 2.0;
                if hi > 1e6 * mu {
                    return Err(numerical(format!(
                        "cannot bracket the real characteristic root below {hi} (b = {})",
                        self.b
                    )));
                }
            }
        }
        // ξ_b is strictly decreasing on (-μ, ∞): plain bisection.
        let mut f_lo = excess(lo)?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = excess(mid)?;
            if v == 0.0 {
                return Ok(Some(mid));
            }
            if (v > 0.0) == (f_lo > 0.0) {
                lo = mid;
                f_lo = v;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        let root = 0.5 * (lo + hi);
        let residual = excess(root)?.abs();
        if residual > 1e-10 {
            return Err(numerical(format!(
                "real characteristic root residual {residual:.3e} exceeds 1e-10 (b = {})",
                self.b
            )));
        }
        Ok(Some(root))
    }

    /// Newton refinement of a characteristic root from `z0`.
    pub fn refine_root(&self, z0: Complex64) -> Option<Complex64> {
        let mu = self.mu();
        let beta_xm = self.model.params.beta_at_xm();
        let mut z = z0;
        for _ in 0..60 {
            let e = self.evaluate(z).ok()?;
            let f = z + mu - beta_xm - e.chi;
            let df = Complex64::new(1.0, 0.0) - e.chi_prime;
            if df.norm() == 0.0 {
                return None;
            }
            let step = f / df;
            z -= step;
            if !(z.re > -mu + self.min_rate()) || !z.is_finite() {
                return None;
            }
            if step.norm() <= 1e-12 * (1.0 + z.norm()) {
                return Some(z);
            }
        }
        None
    }

    /// Number of characteristic roots inside `rect`, certified by tracking the
    /// argument of `Δ` around its boundary. A root on the boundary inflates
    /// the rectangle by 1% (up to three times). Returns the count and the
    /// rectangle actually used.
    pub fn count_roots(&self, rect: Rectangle) -> Result<(u32, Rectangle)> {
        let mu = self.mu();
        let delta = self.min_rate();
        if !(rect.re_min > -mu + delta) || !(rect.re_max > rect.re_min) || !(rect.im_max > 0.0) {
            return Err(domain(format!(
                "invalid counting rectangle {rect:?}; need -μ + δ < re_min < re_max and im_max > 0"
            )));
        }
        let mut current = rect;
        for _ in 0..4 {
            match self.winding(current)? {
                Some(n) => return Ok((n, current)),
                None => current = current.inflated(mu, delta),
            }
        }
        Err(Error::Inconclusive(format!(
            "characteristic root on or near the contour of {rect:?} even after inflation"
        )))
    }

    /// Winding number of `Δ` around the boundary of `rect`, or `None` when
    /// `|Δ|` nearly vanishes on it. By conjugate symmetry only the upper
    /// half of the contour is walked: the winding number equals the
    /// argument change along it divided by `π`.
    fn winding(&self, rect: Rectangle) -> Result<Option<u32>> {
        let corners = [
            Complex64::new(rect.re_max, 0.0),
            Complex64::new(rect.re_max, rect.im_max),
            Complex64::new(rect.re_min, rect.im_max),
            Complex64::new(rect.re_min, 0.0),
        ];
        let mut walker = ContourWalker {
            chf: self,
            points: 0,
        };
        let mut total = 0.0;
        for edge in corners.windows(2) {
            let segments = 64;
            let mut z_prev = edge[0];
            let mut d_prev = match walker.sample(z_prev)? {
                Some(d) => d,
                None => return Ok(None),
            };
            for j in 1..=segments {
                let t = j as f64 / segments as f64;
                let z = edge[0] + (edge[1] - edge[0]) * t;
                let d = match walker.sample(z)? {
                    Some(d) => d,
                    None => return Ok(None),
                };
                match walker.arg_change(z_prev, d_prev, z, d, 0)? {
                    Some(step) => total += step,
                    None => return Ok(None),
                }
                z_prev = z;
                d_prev = d;
            }
        }
        let turns = total / std::f64::consts::PI;
        let n = turns.round();
        if (turns - n).abs() > 0.05 || n < 0.0 {
            return Err(Error::Inconclusive(format!(
                "argument change {total:.6} is not an integer multiple of π"
            )));
        }
        Ok(Some(n as u32))
    }
}

struct ContourWalker<'a, 'm> {
    chf: &'a CharacteristicFunction<'m>,
    points: usize,
}

impl ContourWalker<'_, '_> {
    fn sample(&mut self, z: Complex64) -> Result<Option<Complex64>> {
        self.points += 1;
        if self.points > MAX_CONTOUR_POINTS {
            return Err(Error::Inconclusive(format!(
                "contour refinement exceeded {MAX_CONTOUR_POINTS} points"
            )));
        }
        let d = self.chf.delta_fn(z)?;
        if !d.is_finite() {
            return Err(numerical(format!("non-finite Δ({z})")));
        }
        if d.norm() <= 1e-9 * (1.0 + z.norm()) {
            return Ok(None);
        }
        Ok(Some(d))
    }

    /// Argument change of `Δ` from `z1` to `z2`, refining until every
    /// sub-step turns by less than `π/4`.
    fn arg_change(
        &mut self,
        z1: Complex64,
        d1: Complex64,
        z2: Complex64,
        d2: Complex64,
        depth: u32,
    ) -> Result<Option<f64>> {
        let zm = 0.5 * (z1 + z2);
        let dm = match self.sample(zm)? {
            Some(d) => d,
            None => return Ok(None),
        };
        let t1 = (dm / d1).arg();
        let t2 = (d2 / dm).arg();
        let quarter = std::f64::consts::FRAC_PI_4;
        if t1.abs() < quarter && t2.abs() < quarter {
            return Ok(Some(t1 + t2));
        }
        if depth >= 40 {
            return Err(Error::Inconclusive(format!(
                "argument of Δ varies too fast near {zm}"
            )));
        }
        let left = match self.arg_change(z1, d1, zm, dm, depth + 1)? {
            Some(v) => v,
            None => return Ok(None),
        };
        let right = match self.arg_change(zm, dm, z2, d2, depth + 1)? {
            Some(v) => v,
            None => return Ok(None),
        };
        Ok(Some(left + right))
    }
}

impl Model {
    /// Horizon covering both `χ_b` and `ξ_b` integrands at decay rate `c`.
    pub(crate) fn xi_horizon(&self, b: f64, c: f64) -> Result<f64> {
        let p = &self.params;
        let kappa = 1.0 + b * p.g().log_slope_bound() / c;
        let a_xi = self.beta_horizon(b, c, kappa)?;
        let a_chi = self.beta_prime_horizon(b, c, p.g().at(b / p.mu()))?;
        Ok(a_xi.max(a_chi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BetaFunction, BetaTable, GrowthFunction, ModelParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_beta_has_zero_chi_and_shifted_root() {
        let beta = BetaFunction::Table(BetaTable::new(&[(0.0, 0.4), (2.0, 0.4)]).unwrap());
        let params = ModelParams::new(1.0, 0.0, beta, GrowthFunction::ExpDecay { p: 2.0 }).unwrap();
        let model = Model::new(params);
        for &b in &[0.0, 1.0] {
            let chf = model.characteristic(b).unwrap();
            assert_eq!(chf.chi(c(0.3, 1.2)).unwrap(), c(0.0, 0.0));
            let l0 = chf.dominant_real_root().unwrap();
            assert!((l0 - (0.4 - 1.0)).abs() < 1e-8, "b={b}: {l0}");
        }
    }

    #[test]
    fn trivial_equilibrium_root_closed_form() {
        // At b = 0: ξ_0(λ) = αp/(p + 1 + λ)², so λ₀ = √(αp) - p - 1.
        for &(alpha, p) in &[(6.0, 5.0), (6.0, 1.0)] {
            let model = Model::new(ModelParams::nicholson(alpha, p).unwrap());
            let l0 = model.characteristic(0.0).unwrap().dominant_real_root().unwrap();
            let exact = (alpha * p as f64).sqrt() - p - 1.0;
            assert!((l0 - exact).abs() < 1e-8, "{l0} vs {exact}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let model = Model::new(ModelParams::nicholson(6.0, 5.0).unwrap());
        let chf = model.characteristic(1.0).unwrap();
        let z = c(0.4, 2.7);
        let a = chf.chi(z).unwrap();
        let b = chf.chi(z.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn rejects_points_left_of_boundary() {
        let model = Model::new(ModelParams::nicholson(6.0, 5.0).unwrap());
        let chf = model.characteristic(1.0).unwrap();
        assert!(chf.chi(c(-1.0, 0.0)).is_err());
        assert!(chf.xi(c(-2.0, 1.0)).is_err());
        assert!(chf.count_roots(Rectangle::new(-1.0, 1.0, 1.0)).is_err());
        assert!(model.characteristic(-1.0).is_err());
    }

    #[test]
    fn empty_rectangle_counts_zero() {
        let model = Model::new(ModelParams::nicholson(6.0, 5.0).unwrap());
        let chf = model.characteristic(0.0).unwrap();
        // λ₀ ≈ -0.5228 at b = 0; a rectangle strictly to its right holds no roots.
        let (n, _) = chf.count_roots(Rectangle::new(-0.4, 3.0, 10.0)).unwrap();
        assert_eq!(n, 0);
        let (n, _) = chf.count_roots(Rectangle::new(-0.6, 3.0, 1.0)).unwrap();
        assert_eq!(n, 1);
    }
}
