//! Birth-rate dynamics of a size-structured forest model with infinite memory.
//!
//! The renewal equation
//!
//! ```text
//! b(t) = ∫_0^∞ β( x_m + ∫_0^a g( e^{-μ(τ-a)} ∫_a^∞ e^{-μs} b(t-s) ds ) dτ ) e^{-μa} b(t-a) da
//! ```
//!
//! is studied through three lenses:
//!
//! - [`equilibria`]: the one-dimensional map `F(b) = b R(b)` whose fixed
//!   points are the equilibria, with `F′(b)` deciding local stability;
//! - [`spectrum`]: the characteristic equation of the linearization, its
//!   dominant real root and an argument-principle root counter;
//! - [`simulate`]: a second-order time stepper for the full equation.
//!
//! All inner growth integrals are collapsed through the antiderivative
//! `G(lo, hi) = ∫_lo^hi g(w)/w dw`, which for `g(x) = p e^{-x}` is a
//! difference of exponential integrals.

pub mod equilibria;
pub mod error;
pub mod model;
mod quadrature;
pub mod simulate;
pub mod special;
pub mod spectrum;

pub use equilibria::{EquilibriumRecord, EquilibriumScan, Verdict};
pub use error::{Error, Result};
pub use model::{BetaFunction, BetaTable, GrowthFunction, GrowthTable, History, ModelParams, TailMode};
pub use simulate::{Grid, InitialData, Trajectory};
pub use spectrum::{CharacteristicFunction, Rectangle, SpectrumReport};

use serde::Serialize;

/// Tolerances and discretization sizes shared by the analysis routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Numerics {
    /// Simpson panels over the reference age horizon.
    pub panels: usize,
    /// Bound on neglected integral tails.
    pub tol_tail: f64,
    /// Residual `|R(b) - 1|` accepted for a positive equilibrium.
    pub tol_eq: f64,
    /// Half-width of the band around `F′(b) = 1` classified as critical.
    pub tol_crit: f64,
    /// Offset from the convergence boundary `Re λ = -μ`, relative to `μ`.
    pub delta: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            panels: 8192,
            tol_tail: 1e-10,
            tol_eq: 1e-8,
            tol_crit: 1e-3,
            delta: 1e-6,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.panels >= 2
            && self.tol_tail > 0.0
            && self.tol_eq > 0.0
            && self.tol_crit >= 0.0
            && self.delta > 0.0
            && self.delta < 1.0;
        if ok {
            Ok(())
        } else {
            Err(error::invalid(format!("invalid numerics {self:?}")))
        }
    }
}

/// A model instance paired with the numerics used to analyse it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: ModelParams,
    pub numerics: Numerics,
}

impl Model {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            numerics: Numerics::default(),
        }
    }

    pub fn with_numerics(params: ModelParams, numerics: Numerics) -> Result<Self> {
        numerics.validate()?;
        Ok(Self { params, numerics })
    }
}
