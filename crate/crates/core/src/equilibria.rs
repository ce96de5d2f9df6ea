//! Equilibria of the renewal equation through the map `F(b) = b R(b)`.
//!
//! `R(b) = ∫_0^∞ β(x(b, a)) e^{-μa} da` is the lifetime reproduction of an
//! individual when the birth rate is held at `b`, with `x(b, a)` the height at
//! age `a`. Positive equilibria solve `R(b) = 1`; `b = 0` is always one.
//! An equilibrium is locally stable when `F′(b) < 1` and unstable when
//! `F′(b) > 1`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::quadrature::{adaptive_simpson, bisect, horizon, Rule};
use crate::Model;

/// Local stability of an equilibrium from `F′(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    /// `|F′(b) - 1| ≤ tol_crit`; linearization does not decide.
    Critical,
}

impl Verdict {
    pub fn from_f_prime(f_prime: f64, tol_crit: f64) -> Self {
        if f_prime < 1.0 - tol_crit {
            Verdict::Stable
        } else if f_prime > 1.0 + tol_crit {
            Verdict::Unstable
        } else {
            Verdict::Critical
        }
    }

    /// One-letter code used in sweep signatures.
    pub fn code(self) -> char {
        match self {
            Verdict::Stable => 'S',
            Verdict::Unstable => 'U',
            Verdict::Critical => 'C',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Critical => "critical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRecord {
    pub b: f64,
    /// `R(b)`: 1 for positive equilibria, `R(0)` for the trivial one.
    pub r_value: f64,
    pub f_prime: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumScan {
    /// Sorted by `b`, starting with `b = 0`.
    pub records: Vec<EquilibriumRecord>,
    pub warnings: Vec<String>,
}

impl EquilibriumScan {
    /// Verdict codes joined by commas, e.g. `"S,U,S"`.
    pub fn signature(&self) -> String {
        self.records
            .iter()
            .map(|r| r.verdict.code().to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn check_rate(b: f64) -> Result<()> {
    if b >= 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("birth rate must be finite and ≥ 0, got {b}")))
    }
}

fn check_positive_rate(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("birth rate must be > 0, got {b}")))
    }
}

impl Model {
    /// Age beyond which `∫ κ β(x(b, a)) e^{-c a} da` is below `tol_tail`,
    /// where `κ` bounds the extra factor of the integrand.
    pub(crate) fn beta_horizon(&self, b: f64, c: f64, kappa: f64) -> Result<f64> {
        let p = &self.params;
        let beta = p.beta();
        let growth = beta.tail_growth() * p.g().at(0.0);
        let bound = |a: f64| {
            let x = p.height(b, a);
            kappa * (-c * a).exp() * (beta.envelope(x) / c + growth / (c * c))
        };
        horizon(bound, self.numerics.tol_tail, (1.0 / c).min(1.0 / p.mu()), 1e6 / c)
    }

    /// Same for integrands built on `|β′|`.
    pub(crate) fn beta_prime_horizon(&self, b: f64, c: f64, kappa: f64) -> Result<f64> {
        let p = &self.params;
        let bound = |a: f64| {
            let x = p.height(b, a);
            kappa * (-c * a).exp() * p.beta().derivative_envelope(x) / c
        };
        horizon(bound, self.numerics.tol_tail, (1.0 / c).min(1.0 / p.mu()), 1e6 / c)
    }

    /// Bound on `1 + θ|g′(θ)|/g(θ)` over `θ ≤ b/μ`.
    pub(crate) fn log_slope_factor(&self, b: f64) -> f64 {
        1.0 + b / self.params.mu() * self.params.g().log_slope_bound()
    }

    /// Age at which the height reaches `u`, by bisection to 1e-12 in age.
    pub(crate) fn age_at_height(&self, b: f64, u: f64, a_hi: f64) -> f64 {
        let p = &self.params;
        if u <= p.x_m() {
            return 0.0;
        }
        if p.height(b, a_hi) <= u {
            return a_hi;
        }
        bisect(|a| p.height(b, a) - u, 0.0, a_hi, 1e-14 * a_hi).unwrap_or(a_hi)
    }

    /// `[0, …, a_end]` with the ages where a table knot of `β` or `g` is
    /// crossed inserted in between.
    pub(crate) fn age_breaks(&self, b: f64, a_end: f64) -> Vec<f64> {
        let p = &self.params;
        let mut breaks = vec![0.0, a_end];
        let x_end = p.height(b, a_end);
        for &x in p.beta().knots() {
            if x > p.x_m() && x < x_end {
                breaks.push(self.age_at_height(b, x, a_end));
            }
        }
        if b > 0.0 {
            let top = b / p.mu();
            for &w in p.g().knots() {
                if w > 0.0 && w < top {
                    let a = (top / w).ln() / p.mu();
                    if a < a_end {
                        breaks.push(a);
                    }
                }
            }
        }
        sort_dedup(&mut breaks);
        breaks
    }

    /// Simpson rule in age for `R`-type integrals at birth rate `b`.
    fn reproduction_rule(&self, b: f64) -> Result<Rule> {
        let mu = self.params.mu();
        let a_end = self.beta_horizon(b, mu, self.log_slope_factor(b))?;
        let h = a_end / self.numerics.panels as f64;
        Ok(Rule::simpson(&self.age_breaks(b, a_end), h))
    }

    /// `R(b) = ∫_0^∞ β(x(b, a)) e^{-μa} da`.
    pub fn reproduction_r(&self, b: f64) -> Result<f64> {
        check_rate(b)?;
        let p = &self.params;
        let mu = p.mu();
        let rule = self.reproduction_rule(b)?;
        Ok(rule.integrate(|a| p.beta().at(p.height(b, a)) * (-mu * a).exp()))
    }

    /// `F(b) = b R(b)`.
    pub fn map_f(&self, b: f64) -> Result<f64> {
        Ok(b * self.reproduction_r(b)?)
    }

    /// `F(b)` computed after the change of variables from age to height:
    /// `F(b) = μ ∫_{x_m}^∞ β(u) θ(u)/g(θ(u)) du`, where `θ(u) = e^{-μA} b/μ`
    /// and `A` is the age at which height `u` is reached.
    pub fn map_f_change_of_variables(&self, b: f64) -> Result<f64> {
        check_positive_rate(b)?;
        let p = &self.params;
        let mu = p.mu();
        let a_end = self.beta_horizon(b, mu, 1.0)?;
        let u_end = p.height(b, a_end);
        let mut breaks = vec![p.x_m(), u_end];
        breaks.extend(p.beta().knots().iter().copied().filter(|&x| x > p.x_m() && x < u_end));
        for a in self.age_breaks(b, a_end) {
            breaks.push(p.height(b, a));
        }
        sort_dedup(&mut breaks);
        let integrand = |u: f64| {
            let age = self.age_at_height(b, u, a_end);
            let theta = (-mu * age).exp() * b / mu;
            p.beta().at(u) * theta / p.g().at(theta)
        };
        let tol = 1e-11 * b.max(1.0);
        let per = tol / breaks.len() as f64;
        let total: f64 = breaks
            .windows(2)
            .map(|w| adaptive_simpson(&integrand, w[0], w[1], per))
            .sum();
        Ok(mu * total)
    }

    /// `R′(b) = -R(b)/b - g(b/μ)/(μb) ∫_0^∞ β(x(b, a)) d/da[e^{-μa}/g(e^{-μa}b/μ)] da`.
    ///
    /// At an equilibrium `R(b) = 1` and the leading term is `-1/b`.
    pub fn r_prime(&self, b: f64) -> Result<f64> {
        check_positive_rate(b)?;
        let p = &self.params;
        let mu = p.mu();
        let rule = self.reproduction_rule(b)?;
        let mut r = 0.0;
        let mut weighted = 0.0;
        for (&a, &w) in rule.nodes.iter().zip(&rule.weights) {
            let decay = (-mu * a).exp();
            let theta = decay * b / mu;
            let beta = p.beta().at(p.height(b, a));
            let g = p.g().at(theta);
            let slope = decay * (-mu / g + mu * theta * p.g().prime_at(theta) / (g * g));
            r += w * beta * decay;
            weighted += w * beta * slope;
        }
        Ok(-r / b - p.g().at(b / mu) / (mu * b) * weighted)
    }

    /// `F′(b) = R(b) + b R′(b)`; at `b = 0` this is `R(0)`.
    pub fn f_prime(&self, b: f64) -> Result<f64> {
        check_rate(b)?;
        if b == 0.0 {
            return self.reproduction_r(0.0);
        }
        Ok(self.reproduction_r(b)? + b * self.r_prime(b)?)
    }

    pub fn classify(&self, f_prime: f64) -> Verdict {
        Verdict::from_f_prime(f_prime, self.numerics.tol_crit)
    }

    /// Default scan bound `20·max(1, μ x_m + scale(β))`.
    pub fn default_scan_bound(&self) -> f64 {
        let p = &self.params;
        20.0 * (p.mu() * p.x_m() + p.beta().scale()).max(1.0)
    }

    /// Scans `R(b) - 1` on `n_scan` cells of `[0, b_max]`, refines every sign
    /// change by bisection and classifies all equilibria (including `b = 0`).
    pub fn find_equilibria(&self, b_max: f64, n_scan: usize) -> Result<EquilibriumScan> {
        if !(b_max > 0.0) || !b_max.is_finite() {
            return Err(domain(format!("scan bound must be > 0, got {b_max}")));
        }
        if n_scan < 2 {
            return Err(domain(format!("scan needs at least 2 cells, got {n_scan}")));
        }
        let grid: Vec<f64> = (0..=n_scan).map(|i| b_max * i as f64 / n_scan as f64).collect();
        let excess: Vec<f64> = grid
            .par_iter()
            .map(|&b| self.reproduction_r(b).map(|r| r - 1.0))
            .collect::<Result<_>>()?;

        let mut warnings = Vec::new();
        let mut brackets = Vec::new();
        let mut exact = Vec::new();
        for i in 0..n_scan {
            let (lo, hi) = (excess[i], excess[i + 1]);
            if hi == 0.0 {
                exact.push(grid[i + 1]);
            } else if lo != 0.0 && lo.signum() != hi.signum() {
                brackets.push((grid[i], grid[i + 1]));
                if i + 1 == n_scan {
                    warnings.push(format!(
                        "sign change of R(b) - 1 in the last scan cell [{}, {}]; b_max may truncate equilibria",
                        grid[i], grid[i + 1]
                    ));
                }
            }
        }
        if excess[n_scan] > 0.0 {
            warnings.push(format!(
                "R(b_max) = {} > 1; further equilibria may lie beyond b_max = {b_max}",
                excess[n_scan] + 1.0
            ));
        }

        let mut roots: Vec<f64> = brackets
            .par_iter()
            .map(|&(lo, hi)| {
                let width = 1e-14 * hi.max(1e-300);
                bisect(|b| self.reproduction_r(b).map_or(f64::NAN, |r| r - 1.0), lo, hi, width)
            })
            .collect::<Result<_>>()?;
        roots.extend(exact);
        roots.retain(|&b| b > 0.0);
        roots.sort_by(f64::total_cmp);

        let r0 = excess[0] + 1.0;
        let mut records = vec![EquilibriumRecord {
            b: 0.0,
            r_value: r0,
            f_prime: r0,
            verdict: self.classify(r0),
        }];
        let positive: Vec<EquilibriumRecord> = roots
            .par_iter()
            .map(|&b| {
                let r_value = self.reproduction_r(b)?;
                let f_prime = self.f_prime(b)?;
                Ok(EquilibriumRecord {
                    b,
                    r_value,
                    f_prime,
                    verdict: self.classify(f_prime),
                })
            })
            .collect::<Result<_>>()?;
        for rec in &positive {
            if (rec.r_value - 1.0).abs() > self.numerics.tol_eq {
                warnings.push(format!(
                    "equilibrium near b = {} has residual |R(b) - 1| = {:.3e} above tol_eq",
                    rec.b,
                    (rec.r_value - 1.0).abs()
                ));
            }
        }
        records.extend(positive);
        Ok(EquilibriumScan { records, warnings })
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BetaFunction, BetaTable, GrowthFunction, ModelParams};

    fn nicholson(alpha: f64, p: f64) -> Model {
        Model::new(ModelParams::nicholson(alpha, p).unwrap())
    }

    #[test]
    fn r_at_zero_closed_form() {
        // ∫ α p a e^{-(1+p)a} da = αp/(1+p)².
        for &(alpha, p) in &[(6.0, 5.0), (6.0, 1.0), (2.5, 0.7)] {
            let r0 = nicholson(alpha, p).reproduction_r(0.0).unwrap();
            let exact = alpha * p / ((1.0 + p) * (1.0 + p));
            assert!((r0 - exact).abs() < 1e-9, "{alpha},{p}: {r0} vs {exact}");
        }
    }

    #[test]
    fn f_at_zero_and_domain() {
        let m = nicholson(6.0, 5.0);
        assert_eq!(m.map_f(0.0).unwrap(), 0.0);
        assert!(m.reproduction_r(-1.0).is_err());
        assert!(m.r_prime(0.0).is_err());
        assert!(m.map_f_change_of_variables(0.0).is_err());
        assert!((m.f_prime(0.0).unwrap() - 5.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn verdict_band() {
        assert_eq!(Verdict::from_f_prime(0.99, 1e-3), Verdict::Stable);
        assert_eq!(Verdict::from_f_prime(1.0005, 1e-3), Verdict::Critical);
        assert_eq!(Verdict::from_f_prime(1.01, 1e-3), Verdict::Unstable);
    }

    #[test]
    fn zero_beta_has_only_trivial_equilibrium() {
        let beta = BetaFunction::Table(BetaTable::new(&[(0.0, 0.0), (1.0, 0.0)]).unwrap());
        let params = ModelParams::new(1.0, 0.0, beta, GrowthFunction::ExpDecay { p: 5.0 }).unwrap();
        let m = Model::new(params);
        let scan = m.find_equilibria(m.default_scan_bound(), 50).unwrap();
        assert_eq!(scan.records.len(), 1);
        assert_eq!(scan.records[0].b, 0.0);
        assert_eq!(scan.records[0].verdict, Verdict::Stable);
    }

    #[test]
    fn warns_when_scan_bound_is_short() {
        let m = nicholson(6.0, 1.0);
        let scan = m.find_equilibria(0.05, 4).unwrap();
        assert_eq!(scan.records.len(), 1);
        assert!(!scan.warnings.is_empty());
    }

    #[test]
    fn scan_rejects_bad_arguments() {
        let m = nicholson(6.0, 5.0);
        assert!(m.find_equilibria(0.0, 10).is_err());
        assert!(m.find_equilibria(1.0, 1).is_err());
    }
}
