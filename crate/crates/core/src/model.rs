//! Model parameters and the built-in rate-function families.

use serde::Serialize;

use crate::error::{domain, invalid, Result};
use crate::special::{e1, e1_scaled};

/// Per-capita reproduction rate `β(x)` as a function of height.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaFunction {
    /// `β(x) = α x e^{-x}`, unimodal with its maximum `α/e` at `x = 1`.
    Nicholson { alpha: f64 },
    /// `β(x) = α (1 - e^{-k (x - origin)})` for `x ≥ origin`; nondecreasing.
    Saturating { alpha: f64, k: f64, origin: f64 },
    /// Piecewise-linear interpolation of samples.
    Table(BetaTable),
}

/// Piecewise-linear, nonnegative table for `β`.
///
/// Beyond the last sample the last slope is continued and the result clamped
/// at zero. Queries below the first sample are rejected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// Growth rate `g(x)` of an individual under weighted population pressure `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthFunction {
    /// `g(x) = p e^{-x}`.
    ExpDecay { p: f64 },
    /// Log-linear interpolation of strictly decreasing positive samples.
    Table(GrowthTable),
}

/// Strictly decreasing, strictly positive table for `g`, interpolated
/// log-linearly. The first sample must sit at `x = 0`; beyond the last
/// sample the exponential through the last two samples is continued.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthTable {
    xs: Vec<f64>,
    log_g: Vec<f64>,
    /// Slope of `ln g` on each piece (all negative).
    #[serde(skip)]
    rates: Vec<f64>,
    /// `suffix[i] = ∫_{x_i}^∞ g(w)/w dw` for `i ≥ 1`; `suffix[0]` is unused.
    #[serde(skip)]
    suffix: Vec<f64>,
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

impl BetaTable {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("beta table needs at least two samples"));
        }
        for (i, &(x, y)) in samples.iter().enumerate() {
            check_finite("beta table x", x)?;
            check_finite("beta table value", y)?;
            if x < 0.0 {
                return Err(invalid(format!("beta table heights must be ≥ 0, got {x}")));
            }
            if y < 0.0 {
                return Err(invalid(format!("beta table values must be ≥ 0, got {y} at x={x}")));
            }
            if i > 0 && !(x > samples[i - 1].0) {
                return Err(invalid("beta table heights must be strictly increasing"));
            }
        }
        Ok(Self {
            xs: samples.iter().map(|s| s.0).collect(),
            ys: samples.iter().map(|s| s.1).collect(),
        })
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub(crate) fn knots(&self) -> &[f64] {
        &self.xs
    }

    fn piece(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&k| k <= x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    fn slope(&self, i: usize) -> f64 {
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    fn terminal_slope(&self) -> f64 {
        self.slope(self.xs.len() - 2)
    }

    fn value(&self, x: f64) -> f64 {
        let i = self.piece(x);
        (self.ys[i] + self.slope(i) * (x - self.xs[i])).max(0.0)
    }

    /// Derivative of the interpolant; at an interior knot the mean of the
    /// one-sided slopes (the limit of a central difference).
    fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let last = self.xs[n - 1];
        if x > last {
            return if self.value(x) > 0.0 { self.terminal_slope() } else { 0.0 };
        }
        let i = self.piece(x);
        if i > 0 && x == self.xs[i] {
            return 0.5 * (self.slope(i - 1) + self.slope(i));
        }
        self.slope(i)
    }

    fn envelope(&self, x: f64) -> f64 {
        let tail_max = self
            .samples()
            .filter(|&(xi, _)| xi > x)
            .map(|(_, y)| y)
            .fold(0.0, f64::max);
        tail_max.max(self.value(x))
    }

    fn derivative_envelope(&self, x: f64) -> f64 {
        let n = self.xs.len();
        (0..n - 1)
            .filter(|&i| i == n - 2 || self.xs[i + 1] > x)
            .map(|i| self.slope(i).abs())
            .fold(0.0, f64::max)
    }
}

impl GrowthTable {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("growth table needs at least two samples"));
        }
        if samples[0].0 != 0.0 {
            return Err(invalid("growth table must start at x = 0"));
        }
        for (i, &(x, g)) in samples.iter().enumerate() {
            check_finite("growth table x", x)?;
            check_finite("growth table value", g)?;
            if !(g > 0.0) {
                return Err(invalid(format!("growth table values must be > 0, got {g}")));
            }
            if i > 0 {
                let (xp, gp) = samples[i - 1];
                if !(x > xp) {
                    return Err(invalid("growth table x must be strictly increasing"));
                }
                if !(g < gp) {
                    return Err(invalid("growth table values must be strictly decreasing"));
                }
            }
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let log_g: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
        let rates: Vec<f64> = (0..xs.len() - 1)
            .map(|i| (log_g[i + 1] - log_g[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut table = Self {
            xs,
            log_g,
            rates,
            suffix: Vec::new(),
        };
        let n_pieces = table.rates.len();
        let mut suffix = vec![0.0; n_pieces + 1];
        for i in (1..n_pieces).rev() {
            let hi = if i == n_pieces - 1 { f64::INFINITY } else { table.xs[i + 1] };
            suffix[i] = suffix[i + 1] + table.piece_integral(i, table.xs[i], hi);
        }
        table.suffix = suffix;
        Ok(table)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.log_g.iter().map(|l| l.exp()))
    }

    pub(crate) fn knots(&self) -> &[f64] {
        &self.xs
    }

    fn piece(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&k| k <= x);
        i.saturating_sub(1).min(self.rates.len() - 1)
    }

    fn value(&self, x: f64) -> f64 {
        let i = self.piece(x);
        (self.log_g[i] + self.rates[i] * (x - self.xs[i])).exp()
    }

    fn log_derivative(&self, x: f64) -> f64 {
        let i = self.piece(x);
        if i > 0 && x == self.xs[i] {
            0.5 * (self.rates[i - 1] + self.rates[i])
        } else {
            self.rates[i]
        }
    }

    /// `∫_lo^hi g(w)/w dw` with both ends inside piece `i` (`hi` may be `∞`
    /// on the last piece).
    fn piece_integral(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let d = -self.rates[i];
        let x0 = self.xs[i];
        let upper = if hi.is_infinite() {
            0.0
        } else {
            (d * (x0 - hi)).exp() * e1_scaled(d * hi)
        };
        self.log_g[i].exp() * ((d * (x0 - lo)).exp() * e1_scaled(d * lo) - upper)
    }

    fn tail(&self, w: f64) -> f64 {
        let i = self.piece(w);
        let last = self.rates.len() - 1;
        let hi = if i == last { f64::INFINITY } else { self.xs[i + 1] };
        self.piece_integral(i, w, hi) + if i == last { 0.0 } else { self.suffix[i + 1] }
    }
}

impl BetaFunction {
    fn lower_bound(&self) -> f64 {
        match self {
            BetaFunction::Nicholson { .. } => 0.0,
            BetaFunction::Saturating { origin, .. } => *origin,
            BetaFunction::Table(t) => t.xs[0],
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let lo = self.lower_bound();
        if x.is_nan() || x < lo {
            Err(domain(format!("beta evaluated at height {x} below its domain start {lo}")))
        } else {
            Ok(())
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaFunction::Nicholson { alpha } => {
                check_finite("alpha", alpha)?;
                if !(alpha > 0.0) {
                    return Err(invalid(format!("nicholson alpha must be > 0, got {alpha}")));
                }
            }
            BetaFunction::Saturating { alpha, k, origin } => {
                check_finite("alpha", alpha)?;
                check_finite("k", k)?;
                check_finite("origin", origin)?;
                if !(alpha > 0.0 && k > 0.0) {
                    return Err(invalid("saturating beta needs alpha > 0 and k > 0"));
                }
                if origin < 0.0 {
                    return Err(invalid("saturating beta origin must be ≥ 0"));
                }
            }
            BetaFunction::Table(_) => {}
        }
        Ok(())
    }

    /// `β(x)`; heights below the domain start are rejected.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.at(x))
    }

    /// `β′(x)`.
    pub fn eval_prime(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.prime_at(x))
    }

    pub(crate) fn at(&self, x: f64) -> f64 {
        match *self {
            BetaFunction::Nicholson { alpha } => alpha * x * (-x).exp(),
            BetaFunction::Saturating { alpha, k, origin } => -alpha * (-k * (x - origin)).exp_m1(),
            BetaFunction::Table(ref t) => t.value(x),
        }
    }

    pub(crate) fn prime_at(&self, x: f64) -> f64 {
        match *self {
            BetaFunction::Nicholson { alpha } => alpha * (-x).exp() * (1.0 - x),
            BetaFunction::Saturating { alpha, k, origin } => alpha * k * (-k * (x - origin)).exp(),
            BetaFunction::Table(ref t) => t.derivative(x),
        }
    }

    /// `sup_{y ≥ x} β(y)`, ignoring unbounded linear growth of a table tail
    /// (see [`BetaFunction::tail_growth`]).
    pub(crate) fn envelope(&self, x: f64) -> f64 {
        match *self {
            BetaFunction::Nicholson { alpha } => {
                if x <= 1.0 {
                    alpha * (-1.0f64).exp()
                } else if x > 700.0 {
                    0.0
                } else {
                    alpha * x * (-x).exp()
                }
            }
            BetaFunction::Saturating { alpha, .. } => alpha,
            BetaFunction::Table(ref t) => t.envelope(x),
        }
    }

    /// Rate at which `β` may keep growing past the table (zero otherwise).
    pub(crate) fn tail_growth(&self) -> f64 {
        match self {
            BetaFunction::Table(t) => t.terminal_slope().max(0.0),
            _ => 0.0,
        }
    }

    /// `sup_{y ≥ x} |β′(y)|`.
    pub(crate) fn derivative_envelope(&self, x: f64) -> f64 {
        match *self {
            BetaFunction::Nicholson { alpha } => {
                if x > 700.0 {
                    return 0.0;
                }
                let local = alpha * (-x).exp() * (1.0 - x).abs();
                if x < 2.0 {
                    local.max(alpha * (-2.0f64).exp())
                } else {
                    local
                }
            }
            BetaFunction::Saturating { alpha, k, origin } => alpha * k * (-k * (x - origin).max(0.0)).exp(),
            BetaFunction::Table(ref t) => t.derivative_envelope(x),
        }
    }

    /// Characteristic magnitude of `β`, used for default scan bounds.
    pub fn scale(&self) -> f64 {
        match self {
            BetaFunction::Nicholson { alpha } | BetaFunction::Saturating { alpha, .. } => *alpha,
            BetaFunction::Table(t) => t.ys.iter().copied().fold(0.0, f64::max),
        }
    }

    pub(crate) fn knots(&self) -> &[f64] {
        match self {
            BetaFunction::Table(t) => t.knots(),
            _ => &[],
        }
    }
}

impl GrowthFunction {
    pub fn validate(&self) -> Result<()> {
        if let GrowthFunction::ExpDecay { p } = *self {
            check_finite("p", p)?;
            if !(p > 0.0) {
                return Err(invalid(format!("exp_decay p must be > 0, got {p}")));
            }
        }
        Ok(())
    }

    fn check_domain(x: f64) -> Result<()> {
        if x.is_nan() || x < 0.0 {
            Err(domain(format!("g evaluated at negative argument {x}")))
        } else {
            Ok(())
        }
    }

    /// `g(x)` for `x ≥ 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.at(x))
    }

    /// `g′(x)` for `x ≥ 0`.
    pub fn eval_prime(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.prime_at(x))
    }

    pub(crate) fn at(&self, x: f64) -> f64 {
        match *self {
            GrowthFunction::ExpDecay { p } => p * (-x).exp(),
            GrowthFunction::Table(ref t) => t.value(x),
        }
    }

    pub(crate) fn prime_at(&self, x: f64) -> f64 {
        match *self {
            GrowthFunction::ExpDecay { p } => -p * (-x).exp(),
            GrowthFunction::Table(ref t) => t.log_derivative(x) * t.value(x),
        }
    }

    /// `sup |g′/g|`.
    pub(crate) fn log_slope_bound(&self) -> f64 {
        match self {
            GrowthFunction::ExpDecay { .. } => 1.0,
            GrowthFunction::Table(t) => t.rates.iter().map(|r| r.abs()).fold(0.0, f64::max),
        }
    }

    /// `∫_w^∞ g(s)/s ds` for `w > 0`.
    pub(crate) fn tail_integral(&self, w: f64) -> f64 {
        match *self {
            GrowthFunction::ExpDecay { p } => {
                if w.is_infinite() {
                    0.0
                } else {
                    p * e1(w)
                }
            }
            GrowthFunction::Table(ref t) => {
                if w.is_infinite() {
                    0.0
                } else {
                    t.tail(w)
                }
            }
        }
    }

    /// `G(lo, hi) = ∫_lo^hi g(w)/w dw` for `0 < lo ≤ hi ≤ ∞`.
    pub fn antiderivative(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo > 0.0) {
            return Err(domain(format!(
                "growth antiderivative needs a positive lower limit, got {lo}"
            )));
        }
        if hi.is_nan() || hi < lo {
            return Err(domain(format!("growth antiderivative needs lo ≤ hi, got [{lo}, {hi}]")));
        }
        if lo == hi {
            return Ok(0.0);
        }
        Ok(self.tail_integral(lo) - self.tail_integral(hi))
    }

    pub(crate) fn knots(&self) -> &[f64] {
        match self {
            GrowthFunction::Table(t) => t.knots(),
            _ => &[],
        }
    }
}

/// One model instance: death rate, newborn height and the two rate functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    mu: f64,
    x_m: f64,
    beta: BetaFunction,
    g: GrowthFunction,
}

impl ModelParams {
    /// Validates `μ > 0`, `x_m ≥ 0`, the rate-function families, and
    /// `0 ≤ β(x_m) < μ`.
    pub fn new(mu: f64, x_m: f64, beta: BetaFunction, g: GrowthFunction) -> Result<Self> {
        check_finite("mu", mu)?;
        check_finite("x_m", x_m)?;
        if !(mu > 0.0) {
            return Err(invalid(format!("mu must be > 0, got {mu}")));
        }
        if x_m < 0.0 {
            return Err(invalid(format!("x_m must be ≥ 0, got {x_m}")));
        }
        beta.validate()?;
        g.validate()?;
        let beta_at_xm = beta
            .eval(x_m)
            .map_err(|_| invalid(format!("beta is not defined at the newborn height x_m = {x_m}")))?;
        if !(beta_at_xm < mu) {
            return Err(invalid(format!(
                "beta(x_m) = {beta_at_xm} must be below mu = {mu}"
            )));
        }
        Ok(Self { mu, x_m, beta, g })
    }

    /// `β(x) = α x e^{-x}`, `g(x) = p e^{-x}`, `μ = 1`, `x_m = 0`.
    pub fn nicholson(alpha: f64, p: f64) -> Result<Self> {
        Self::new(1.0, 0.0, BetaFunction::Nicholson { alpha }, GrowthFunction::ExpDecay { p })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x_m(&self) -> f64 {
        self.x_m
    }

    pub fn beta(&self) -> &BetaFunction {
        &self.beta
    }

    pub fn g(&self) -> &GrowthFunction {
        &self.g
    }

    pub fn beta_at_xm(&self) -> f64 {
        self.beta.at(self.x_m)
    }

    /// Height reached at age `a` in a population with constant birth rate `b`:
    /// `x_m + ∫_0^a g(e^{-μτ} b/μ) dτ`.
    pub fn height_at_age(&self, b: f64, a: f64) -> Result<f64> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(domain(format!("birth rate must be ≥ 0, got {b}")));
        }
        if !(a >= 0.0) {
            return Err(domain(format!("age must be ≥ 0, got {a}")));
        }
        Ok(self.height(b, a))
    }

    pub(crate) fn height(&self, b: f64, a: f64) -> f64 {
        if a == 0.0 {
            return self.x_m;
        }
        if b == 0.0 {
            return self.x_m + self.g.at(0.0) * a;
        }
        let top = b / self.mu;
        let bottom = (-self.mu * a).exp() * top;
        if bottom == 0.0 {
            // e^{-μa} underflowed; only reachable for absurd ages.
            return f64::INFINITY;
        }
        self.x_m + (self.g.tail_integral(bottom) - self.g.tail_integral(top)) / self.mu
    }

    /// Height at age `a` given the weighted tail integral
    /// `I_a = ∫_a^∞ e^{-μs} b(t-s) ds` of a general history:
    /// `x_m + ∫_0^a g(e^{-μ(τ-a)} I_a) dτ = x_m + G(I_a, e^{μa} I_a)/μ`.
    pub fn height_kernel(&self, a: f64, i_a: f64) -> Result<f64> {
        if !(a >= 0.0) {
            return Err(domain(format!("age must be ≥ 0, got {a}")));
        }
        if !(i_a >= 0.0) || !i_a.is_finite() {
            return Err(domain(format!("tail integral must be ≥ 0, got {i_a}")));
        }
        Ok(self.kernel_height(a, i_a))
    }

    pub(crate) fn kernel_height(&self, a: f64, i_a: f64) -> f64 {
        if a == 0.0 {
            return self.x_m;
        }
        if i_a == 0.0 {
            return self.x_m + self.g.at(0.0) * a;
        }
        let top = (self.mu * a).exp() * i_a;
        self.x_m + (self.g.tail_integral(i_a) - self.g.tail_integral(top)) / self.mu
    }
}

/// How a discretized history continues beyond its stored horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailMode {
    Zero,
    ConstantLast,
    PeriodicExtension { period: f64 },
}

/// Birth-rate history `φ(s)`, `s ∈ [-a_max, 0]`, on a uniform grid.
///
/// `samples[k] = φ(-k h)` for `k = 0..=a_max/h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct History {
    h: f64,
    samples: Vec<f64>,
    tail: TailMode,
}

impl History {
    pub fn new(h: f64, samples: Vec<f64>, tail: TailMode) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("history step must be > 0, got {h}")));
        }
        if samples.len() < 2 {
            return Err(invalid("history needs at least two samples"));
        }
        if let Some(bad) = samples.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(invalid(format!("history values must be finite and ≥ 0, got {bad}")));
        }
        if let TailMode::PeriodicExtension { period } = tail {
            let a_max = h * (samples.len() - 1) as f64;
            if !(period > 0.0) || period > a_max * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "periodic tail needs 0 < period ≤ a_max = {a_max}, got {period}"
                )));
            }
        }
        Ok(Self { h, samples, tail })
    }

    /// Samples a function of `s ≤ 0` on the grid `s = -k h`, `k = 0..=n`.
    pub fn from_fn(h: f64, n: usize, tail: TailMode, phi: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..=n).map(|k| phi(-(k as f64) * h)).collect();
        Self::new(h, samples, tail)
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn a_max(&self) -> f64 {
        self.h * (self.samples.len() - 1) as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn tail_mode(&self) -> TailMode {
        self.tail
    }

    /// `φ(s)` for any `s ≤ 0`: linear interpolation inside the grid, the
    /// tail mode beyond it.
    pub fn value_at(&self, s: f64) -> f64 {
        let a = -s;
        let a_max = self.a_max();
        if a <= a_max {
            let pos = (a / self.h).max(0.0);
            let k = (pos.floor() as usize).min(self.samples.len() - 2);
            let frac = pos - k as f64;
            return self.samples[k] * (1.0 - frac) + self.samples[k + 1] * frac;
        }
        match self.tail {
            TailMode::Zero => 0.0,
            TailMode::ConstantLast => *self.samples.last().unwrap(),
            TailMode::PeriodicExtension { period } => {
                let shift = ((a - a_max) / period).ceil();
                self.value_at(-(a - shift * period))
            }
        }
    }

    /// `|φ|_ρ ≈ Σ samples·e^{-ρ k h}·h` over the stored grid.
    pub fn weighted_norm(&self, rho: f64) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(k, v)| v * (-rho * k as f64 * self.h).exp() * self.h)
            .sum()
    }

    /// `∫_{a_max}^∞ e^{-μs} φ(-s) ds` implied by the tail mode.
    pub fn tail_integral(&self, mu: f64) -> f64 {
        let a_max = self.a_max();
        match self.tail {
            TailMode::Zero => 0.0,
            TailMode::ConstantLast => self.samples.last().unwrap() * (-mu * a_max).exp() / mu,
            TailMode::PeriodicExtension { period } => {
                // One period past a_max, summed geometrically.
                let n = 2 * (32.0 * period / self.h).ceil().max(32.0) as usize;
                let dx = period / n as f64;
                let one_period: f64 = (0..=n)
                    .map(|i| {
                        let s = a_max + i as f64 * dx;
                        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                        w * (-mu * s).exp() * self.value_at(-s)
                    })
                    .sum::<f64>()
                    * dx
                    / 3.0;
                one_period / (1.0 - (-mu * period).exp())
            }
        }
    }

    /// Resamples onto step `h` with `n + 1` points; positions beyond the
    /// stored horizon follow the tail mode.
    pub fn resample(&self, h: f64, n: usize) -> Result<Self> {
        if (h - self.h).abs() <= 1e-12 * self.h && n + 1 == self.samples.len() {
            return Ok(self.clone());
        }
        Self::from_fn(h, n, self.tail, |s| self.value_at(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn nicholson_values() {
        let beta = BetaFunction::Nicholson { alpha: 6.0 };
        assert_eq!(beta.eval(0.0).unwrap(), 0.0);
        assert!(close(beta.eval(1.0).unwrap(), 6.0 * (-1.0f64).exp(), 1e-15));
        assert!(close(beta.eval(1.0).unwrap(), 2.2073, 1e-4));
        assert_eq!(beta.eval_prime(1.0).unwrap(), 0.0);
        assert_eq!(beta.eval_prime(0.0).unwrap(), 6.0);
        assert!(beta.eval(-0.1).is_err());
    }

    #[test]
    fn saturating_values() {
        let beta = BetaFunction::Saturating { alpha: 0.5, k: 1.0, origin: 0.0 };
        assert!(close(beta.eval(1e3).unwrap(), 0.5, 1e-15));
        for x in [0.0, 0.5, 3.0, 40.0] {
            assert!(beta.eval_prime(x).unwrap() > 0.0);
        }
    }

    #[test]
    fn exp_decay_values() {
        let g = GrowthFunction::ExpDecay { p: 5.0 };
        assert_eq!(g.eval(0.0).unwrap(), 5.0);
        assert_eq!(g.eval_prime(0.0).unwrap(), -5.0);
        assert!(g.eval(800.0).unwrap() >= 0.0 && g.eval(50.0).unwrap() < 1e-20);
        let g1 = GrowthFunction::ExpDecay { p: 1.0 };
        assert!(close(g1.eval(2f64.ln()).unwrap(), 0.5, 1e-15));
        assert!(close(g1.eval_prime(1.0).unwrap(), -(-1.0f64).exp(), 1e-15));
        assert!(g.eval(-1.0).is_err());
    }

    #[test]
    fn beta_table_interpolates_and_clamps() {
        let t = BetaTable::new(&[(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)]).unwrap();
        let beta = BetaFunction::Table(t);
        assert!(close(beta.eval(0.5).unwrap(), 1.0, 1e-15));
        assert!(close(beta.eval(1.5).unwrap(), 1.5, 1e-15));
        // Last slope -1 continues and is clamped at zero.
        assert!(close(beta.eval(2.5).unwrap(), 0.5, 1e-15));
        assert_eq!(beta.eval(10.0).unwrap(), 0.0);
        assert_eq!(beta.eval_prime(10.0).unwrap(), 0.0);
        assert_eq!(beta.eval_prime(1.0).unwrap(), 0.5);
        assert_eq!(beta.eval_prime(0.5).unwrap(), 2.0);
    }

    #[test]
    fn beta_table_rejects_bad_samples() {
        assert!(BetaTable::new(&[(0.0, 1.0)]).is_err());
        assert!(BetaTable::new(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(BetaTable::new(&[(0.0, -1.0), (1.0, 2.0)]).is_err());
        let t = BetaTable::new(&[(1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert!(BetaFunction::Table(t).eval(0.5).is_err());
    }

    #[test]
    fn growth_table_checks() {
        assert!(GrowthTable::new(&[(0.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(GrowthTable::new(&[(0.5, 1.0), (1.0, 0.5)]).is_err());
        assert!(GrowthTable::new(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
        let t = GrowthTable::new(&[(0.0, 2.0), (1.0, 1.0), (3.0, 0.25)]).unwrap();
        let g = GrowthFunction::Table(t);
        assert!(close(g.eval(0.5).unwrap(), 2f64.sqrt(), 1e-14));
        assert!(close(g.eval(5.0).unwrap(), 0.25 / 4.0, 1e-14));
        for x in [0.0, 0.3, 1.0, 2.0, 7.0] {
            assert!(g.eval_prime(x).unwrap() < 0.0);
        }
    }

    #[test]
    fn antiderivative_edge_cases() {
        let g = GrowthFunction::ExpDecay { p: 1.0 };
        assert_eq!(g.antiderivative(1.0, 1.0).unwrap(), 0.0);
        assert!(close(g.antiderivative(1.0, f64::INFINITY).unwrap(), 0.219_383_934_395_52, 1e-13));
        assert!(g.antiderivative(0.0, 1.0).is_err());
        assert!(g.antiderivative(-1.0, 1.0).is_err());
        assert!(g.antiderivative(2.0, 1.0).is_err());
    }

    #[test]
    fn exponential_table_matches_closed_form() {
        let samples: Vec<(f64, f64)> = (0..=20).map(|i| {
            let x = i as f64 * 0.5;
            (x, 3.0 * (-x).exp())
        }).collect();
        let table = GrowthFunction::Table(GrowthTable::new(&samples).unwrap());
        let exact = GrowthFunction::ExpDecay { p: 3.0 };
        for &(lo, hi) in &[(1e-3, 0.2), (0.3, 4.7), (2.0, 30.0), (0.1, f64::INFINITY)] {
            let a = table.antiderivative(lo, hi).unwrap();
            let b = exact.antiderivative(lo, hi).unwrap();
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{lo},{hi}: {a} vs {b}");
        }
    }

    #[test]
    fn params_enforce_invariants() {
        let beta = BetaFunction::Nicholson { alpha: 6.0 };
        let g = GrowthFunction::ExpDecay { p: 5.0 };
        assert!(ModelParams::new(0.0, 0.0, beta.clone(), g.clone()).is_err());
        assert!(ModelParams::new(1.0, -1.0, beta.clone(), g.clone()).is_err());
        // β(1) = 6/e > 1 = μ.
        assert!(ModelParams::new(1.0, 1.0, beta, g.clone()).is_err());
        let flat = BetaTable::new(&[(0.0, 2.0), (1.0, 2.0)]).unwrap();
        assert!(ModelParams::new(1.0, 0.0, BetaFunction::Table(flat), g).is_err());
    }

    #[test]
    fn height_at_age_basics() {
        let params = ModelParams::nicholson(6.0, 5.0).unwrap();
        assert_eq!(params.height_at_age(0.0, 2.0).unwrap(), 10.0);
        assert_eq!(params.height_at_age(1.3, 0.0).unwrap(), 0.0);
        assert!(params.height_at_age(-1.0, 1.0).is_err());
        assert!(params.height_at_age(1.0, -1.0).is_err());
    }

    #[test]
    fn height_kernel_matches_constant_history() {
        let params = ModelParams::nicholson(6.0, 5.0).unwrap();
        for &c in &[0.1, 0.47, 3.2] {
            for &a in &[0.0f64, 0.3, 2.0, 17.0] {
                let i_a = c * (-a).exp();
                let k = params.height_kernel(a, i_a).unwrap();
                let h = params.height_at_age(c, a).unwrap();
                assert!(close(k, h, 1e-12 * h.max(1.0)), "c={c} a={a}: {k} vs {h}");
            }
        }
        assert_eq!(params.height_kernel(2.0, 0.0).unwrap(), 10.0);
    }

    #[test]
    fn history_tails() {
        let mu = 1.0;
        let hist = History::from_fn(0.1, 100, TailMode::ConstantLast, |_| 2.0).unwrap();
        assert!(close(hist.tail_integral(mu), 2.0 * (-10.0f64).exp(), 1e-18));
        assert_eq!(History::from_fn(0.1, 100, TailMode::Zero, |_| 2.0).unwrap().tail_integral(mu), 0.0);
        // A periodic history that is actually constant reproduces the constant tail.
        let per = History::from_fn(0.1, 100, TailMode::PeriodicExtension { period: 2.0 }, |_| 2.0).unwrap();
        assert!(close(per.tail_integral(mu), 2.0 * (-10.0f64).exp(), 1e-12));
        assert!(History::new(0.1, vec![1.0, -1.0], TailMode::Zero).is_err());
        assert!(close(hist.weighted_norm(0.0), 2.0 * 0.1 * 101.0, 1e-12));
    }
}
