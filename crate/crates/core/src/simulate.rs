//! Time stepping of the renewal equation.
//!
//! With `I(a) = ∫_a^∞ e^{-μs} b(t-s) ds` the nested growth integral collapses
//! to `x_m + G(I(a), e^{μa} I(a))/μ`, so one step costs `O(a_max/h)`:
//! a backward trapezoid sweep for `I`, then a trapezoid sum for `b(t)`.
//! The unknown `b(t)` enters that sum only at `a = 0`, where the height is
//! `x_m`, so each step is a scalar linear solve.
//!
//! Initial data generally do not satisfy the equation at `t = 0`, so `b` jumps
//! from `φ(0)` to `b(0+) = 𝔉φ`. Panels on either side of `t = 0` use the
//! matching one-sided value, which keeps the scheme second order.

use serde::Serialize;

use crate::error::{domain, invalid, numerical, Result};
use crate::model::{History, ModelParams, TailMode};
use crate::Model;

/// Uniform time grid shared by the history and the simulated future.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    h: f64,
    n_hist: usize,
    n_steps: usize,
    #[serde(skip)]
    warnings: Vec<String>,
}

impl Grid {
    /// `a_max` and `t_end` are rounded to multiples of `h`, with a warning
    /// when that moves them.
    pub fn new(h: f64, a_max: f64, t_end: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("time step must be > 0, got {h}")));
        }
        if !(a_max >= h) || !a_max.is_finite() {
            return Err(invalid(format!("history horizon must be ≥ h = {h}, got {a_max}")));
        }
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(invalid(format!("simulation length must be ≥ 0, got {t_end}")));
        }
        let mut warnings = Vec::new();
        let mut count = |name: &str, v: f64| {
            let n = (v / h).round();
            if (n * h - v).abs() > 1e-9 * v.max(h) {
                warnings.push(format!("{name} = {v} rounded to {} (multiple of h = {h})", n * h));
            }
            n as usize
        };
        let n_hist = count("a_max", a_max).max(1);
        let n_steps = count("t_end", t_end);
        if n_hist + n_steps > 200_000_000 {
            return Err(invalid("grid has too many points"));
        }
        Ok(Self {
            h,
            n_hist,
            n_steps,
            warnings,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn a_max(&self) -> f64 {
        self.h * self.n_hist as f64
    }

    pub fn t_end(&self) -> f64 {
        self.h * self.n_steps as f64
    }

    pub fn history_points(&self) -> usize {
        self.n_hist
    }

    pub fn steps(&self) -> usize {
        self.n_steps
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Checks the horizon against the tail tolerance and the step against
    /// the implicit solve at `a = 0`.
    pub fn check(&self, params: &ModelParams, tol_tail: f64) -> Result<()> {
        let mu = params.mu();
        if (-mu * self.a_max()).exp() > tol_tail {
            return Err(invalid(format!(
                "history horizon a_max = {} leaves e^(-μ a_max) = {:.3e} above the tail tolerance {tol_tail:.1e}",
                self.a_max(),
                (-mu * self.a_max()).exp()
            )));
        }
        if 0.5 * self.h * params.beta_at_xm() >= 1.0 {
            return Err(invalid(format!(
                "step h = {} too large: (h/2)·β(x_m) = {} ≥ 1",
                self.h,
                0.5 * self.h * params.beta_at_xm()
            )));
        }
        Ok(())
    }
}

/// Initial birth-rate history `φ` on `(-∞, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Constant { value: f64 },
    /// `φ(a) = b_star + eps·sin(omega·a)` for `a ≤ 0`.
    Periodic { b_star: f64, eps: f64, omega: f64 },
    Tabulated { history: History },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialData::Constant { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(domain(format!("constant initial data must be ≥ 0, got {value}")));
                }
            }
            InitialData::Periodic { b_star, eps, omega } => {
                if !b_star.is_finite() || !eps.is_finite() || !omega.is_finite() {
                    return Err(invalid("periodic initial data must be finite"));
                }
                if !(b_star - eps.abs() >= 0.0) {
                    return Err(domain(format!(
                        "periodic initial data need b_star ≥ |eps|, got b_star = {b_star}, eps = {eps}"
                    )));
                }
            }
            // History::new already rejects negative samples.
            InitialData::Tabulated { .. } => {}
        }
        Ok(())
    }

    /// `φ(s)` for `s ≤ 0`.
    pub fn value_at(&self, s: f64) -> f64 {
        match self {
            InitialData::Constant { value } => *value,
            InitialData::Periodic { b_star, eps, omega } => b_star + eps * (omega * s).sin(),
            InitialData::Tabulated { history } => history.value_at(s),
        }
    }

    /// `∫_{a_max}^∞ e^{-μs} φ(-s) ds`: closed form for the analytic families,
    /// the history's tail mode for tabulated data.
    pub fn tail_integral(&self, mu: f64, a_max: f64) -> f64 {
        let decay = (-mu * a_max).exp();
        match self {
            InitialData::Constant { value } => value * decay / mu,
            InitialData::Periodic { b_star, eps, omega } => {
                // φ(-s) = b_star - eps·sin(omega·s)
                let sine = decay * (mu * (omega * a_max).sin() + omega * (omega * a_max).cos())
                    / (mu * mu + omega * omega);
                b_star * decay / mu - eps * sine
            }
            InitialData::Tabulated { history } => {
                let h = history.step();
                let n = (a_max / h).round() as usize;
                match history.resample(h, n) {
                    Ok(r) => r.tail_integral(mu),
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Samples `φ(-k h)`, `k = 0..=n_hist`, on the grid.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        if let InitialData::Tabulated { history } = self {
            // Same step: take the samples as they are, bit for bit.
            if (history.step() - grid.h).abs() <= 1e-12 * grid.h {
                let given = history.samples();
                return (0..=grid.n_hist)
                    .map(|k| match given.get(k) {
                        Some(&v) => v,
                        None => history.value_at(-(k as f64) * grid.h),
                    })
                    .collect();
            }
        }
        (0..=grid.n_hist)
            .map(|k| self.value_at(-(k as f64) * grid.h))
            .collect()
    }
}

/// Nearest equilibrium to a trajectory's limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumMatch {
    pub equilibrium: f64,
    pub distance: f64,
}

/// Convergence diagnostics over a trailing window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Asymptote {
    pub converged: bool,
    /// Trailing mean.
    pub limit: f64,
    /// `(max - min)/max(1, mean)` over the window.
    pub oscillation: f64,
    pub window: f64,
    pub conv_tol: f64,
    pub matched_equilibrium: Option<EquilibriumMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `values[0] = φ(0)`; later entries solve the equation.
    pub values: Vec<f64>,
    /// Right limit `b(0+) = 𝔉φ`.
    pub b0_plus: f64,
    pub asymptote: Asymptote,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn converged(&self) -> bool {
        self.asymptote.converged
    }

    pub fn limit(&self) -> Option<f64> {
        self.asymptote.converged.then_some(self.asymptote.limit)
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Value at the grid time nearest to `t`.
    pub fn value_near(&self, t: f64) -> f64 {
        let h = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 1.0 };
        let k = ((t / h).round().max(0.0) as usize).min(self.values.len() - 1);
        self.values[k]
    }

    /// Recomputes the diagnostics and matches the limit against `equilibria`.
    pub fn detect_asymptote(&mut self, window: f64, conv_tol: f64, equilibria: &[f64]) {
        self.asymptote = detect_asymptote(&self.times, &self.values, window, conv_tol, equilibria);
    }
}

/// Converged iff the relative oscillation over the trailing `window` is at
/// most `conv_tol`; the limit is the trailing mean.
pub fn detect_asymptote(
    times: &[f64],
    values: &[f64],
    window: f64,
    conv_tol: f64,
    equilibria: &[f64],
) -> Asymptote {
    let t_last = times.last().copied().unwrap_or(0.0);
    let start = times.partition_point(|&t| t < t_last - window);
    let tail = &values[start.min(values.len())..];
    let long_enough = times.first().is_some_and(|&t0| t_last - t0 > window);
    let (lo, hi, sum) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), &v| {
            (lo.min(v), hi.max(v), s + v)
        });
    let mean = if tail.is_empty() { f64::NAN } else { sum / tail.len() as f64 };
    let oscillation = (hi - lo) / mean.abs().max(1.0);
    let matched_equilibrium = equilibria
        .iter()
        .map(|&e| EquilibriumMatch {
            equilibrium: e,
            distance: (e - mean).abs(),
        })
        .min_by(|a, b| a.distance.total_cmp(&b.distance));
    Asymptote {
        converged: long_enough && oscillation <= conv_tol,
        limit: mean,
        oscillation,
        window,
        conv_tol,
        matched_equilibrium,
    }
}

/// `I(a_k) = ∫_{a_k}^∞ e^{-μs} b(t-s) ds` on `a_k = k h` from samples
/// `b(t - k h)` and the tail `I(a_max)`, by backward trapezoid recursion.
pub fn tail_integral_profile(mu: f64, h: f64, samples: &[f64], tail: f64) -> Vec<f64> {
    let n = samples.len() - 1;
    let mut out = vec![0.0; n + 1];
    out[n] = tail;
    for k in (0..n).rev() {
        let lo = (-mu * k as f64 * h).exp() * samples[k];
        let hi = (-mu * (k + 1) as f64 * h).exp() * samples[k + 1];
        out[k] = out[k + 1] + 0.5 * h * (lo + hi);
    }
    out
}

impl ModelParams {
    /// Trapezoid value of `𝔉` on a discretized history (`samples[0] = b(t)`),
    /// with the history's tail mode beyond its horizon. The part of the
    /// outer integral beyond the horizon is dropped.
    pub fn apply_functional(&self, history: &History) -> Result<f64> {
        let mu = self.mu();
        let h = history.step();
        let samples = history.samples();
        let profile = tail_integral_profile(mu, h, samples, history.tail_integral(mu));
        let n = samples.len() - 1;
        let node = |k: usize| {
            let a = k as f64 * h;
            let x = self.kernel_height(a, profile[k].max(0.0));
            self.beta().at(x) * (-mu * a).exp() * samples[k]
        };
        let mut sum = 0.5 * (node(0) + node(n));
        for k in 1..n {
            sum += node(k);
        }
        let value = sum * h;
        if !value.is_finite() {
            return Err(numerical("non-finite functional value"));
        }
        Ok(value)
    }
}

impl Model {
    /// Simulates from `init` on `grid` with the default convergence window
    /// `10/μ` and tolerance `1e-6`.
    pub fn simulate(&self, grid: &Grid, init: &InitialData) -> Result<Trajectory> {
        self.simulate_with(grid, init, 10.0 / self.params.mu(), 1e-6)
    }

    pub fn simulate_with(
        &self,
        grid: &Grid,
        init: &InitialData,
        window: f64,
        conv_tol: f64,
    ) -> Result<Trajectory> {
        let p = &self.params;
        grid.check(p, self.numerics.tol_tail)?;
        init.validate()?;
        let mut warnings = grid.warnings.clone();
        if let InitialData::Tabulated { history } = init {
            if history.tail_mode() == TailMode::Zero
                && (history.a_max() < grid.a_max() - 0.5 * grid.h
                    || history.samples().last().is_some_and(|&v| v > 0.0))
            {
                warnings.push("tabulated initial data are extended by zero beyond their horizon".into());
            }
        }

        let mu = p.mu();
        let h = grid.h;
        let n_hist = grid.n_hist;
        let n_steps = grid.n_steps;
        let hist = init.sample(grid);
        let decay: Vec<f64> = (0..=n_hist).map(|k| (-mu * k as f64 * h).exp()).collect();
        let mut future: Vec<f64> = Vec::with_capacity(n_steps + 1);
        let mut profile = vec![0.0; n_hist + 1];
        let mut tail = init.tail_integral(mu, grid.a_max());
        let implicit = 1.0 - 0.5 * h * p.beta_at_xm();

        // Time index j ↔ t = j h. At j = 0 a panel's upper (later-time) node
        // sees φ(0) and its lower node sees b(0+).
        let value = |future: &[f64], j: isize, upper: bool| -> f64 {
            if j > 0 || (j == 0 && !upper) {
                future[j as usize]
            } else {
                hist[(-j) as usize]
            }
        };

        for n in 0..=n_steps {
            let ni = n as isize;
            profile[n_hist] = tail;
            for k in (1..n_hist).rev() {
                let up = value(&future, ni - k as isize, true);
                let low = value(&future, ni - k as isize - 1, false);
                profile[k] = profile[k + 1] + 0.5 * h * (decay[k] * up + decay[k + 1] * low);
            }
            let kernel = |k: usize| {
                let x = p.kernel_height(k as f64 * h, profile[k]);
                p.beta().at(x) * decay[k]
            };
            let mut sum = 0.0;
            let mut k_prev = p.beta_at_xm();
            for k in 0..n_hist {
                let k_next = kernel(k + 1);
                if k > 0 {
                    sum += k_prev * value(&future, ni - k as isize, true);
                }
                sum += k_next * value(&future, ni - k as isize - 1, false);
                k_prev = k_next;
            }
            let b = if n == 0 {
                0.5 * h * (sum + p.beta_at_xm() * hist[0])
            } else {
                0.5 * h * sum / implicit
            };
            if !b.is_finite() {
                return Err(numerical(format!("non-finite birth rate at t = {}", n as f64 * h)));
            }
            future.push(b.max(0.0));

            // I(a_max) at the next time: shift by h and add the panel that
            // crosses the horizon.
            let j_hi = ni - n_hist as isize + 1;
            let up = value(&future, j_hi, true);
            let low = value(&future, j_hi - 1, false);
            tail = (-mu * h).exp()
                * (tail + 0.5 * h * (decay[n_hist - 1] * up + decay[n_hist] * low));
        }

        let times: Vec<f64> = (0..=n_steps).map(|n| n as f64 * h).collect();
        let mut values = future.clone();
        let b0_plus = values[0];
        values[0] = hist[0];
        let asymptote = detect_asymptote(&times, &values, window, conv_tol, &[]);
        Ok(Trajectory {
            times,
            values,
            b0_plus,
            asymptote,
            warnings,
        })
    }
}
