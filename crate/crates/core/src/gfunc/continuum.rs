//! Thermodynamic-limit closed form of `G` and its finite-box residual.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{g_lattice, PhysParams};
use crate::error::{domain, Error, Result};

/// Angular kernel `F(s, τ)` of the continuum integral.
pub fn f_kernel(p: &PhysParams, s: f64, tau: f64) -> Result<f64> {
    p.check_tau(tau)?;
    if !(s >= 0.0) {
        return Err(Error::Precondition(format!("s must be nonnegative, got {s}")));
    }
    let mr = p.mass_ratio;
    let base = tau + p.reduced_mass() * p.mu;
    let t = s / mr + base;
    let x = 4.0 * s * p.mu / (mr * mr * t * t);
    let radicand = 1.0 - x;
    if radicand < 0.0 {
        return Err(domain(format!(
            "negative radicand {radicand} in F at s = {s}, tau = {tau}, M = {mr}"
        )));
    }
    Ok(t / (s / (mr + 1.0) + base) * x / (1.0 + radicand.sqrt()))
}

/// Value of `G` in the limit `L → ∞`; `certified` is false for `M ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumG {
    pub value: f64,
    pub certified: bool,
}

pub fn g_continuum(p: &PhysParams, q2: f64, tau: f64) -> Result<ContinuumG> {
    let f = f_kernel(p, q2, tau)?;
    let m = p.reduced_mass();
    let arg = (q2 / (p.mass_ratio + 1.0) + tau + m * p.mu) / p.abs_binding();
    if !(arg > 0.0) || !(f < 2.0) {
        return Err(domain(format!("logarithm argument is not positive at q2 = {q2}, tau = {tau}")));
    }
    let value = (arg.ln() + (-0.5 * f).ln_1p()) / (4.0 * PI * m);
    Ok(ContinuumG { value, certified: p.mass_ratio > 1.0 })
}

/// Finite-box deviation from the continuum at one box size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonRow {
    pub box_side: f64,
    pub residual: f64,
    /// `residual · (L²|E_B|)^{3/2}`.
    pub scaled: f64,
    pub wellcoupled: bool,
}

pub fn poisson_residual(p: &PhysParams, q: [f64; 2], tau: f64, boxes: &[f64]) -> Result<Vec<PoissonRow>> {
    let q2 = q[0] * q[0] + q[1] * q[1];
    let limit = g_continuum(p, q2, tau)?.value;
    boxes
        .iter()
        .map(|&l| {
            let pl = p.with_box(l)?;
            let residual = g_lattice(&pl, q, tau)?.value - limit;
            let x = l * l * p.abs_binding();
            Ok(PoissonRow { box_side: l, residual, scaled: residual * x.powf(1.5), wellcoupled: pl.wellcoupled() })
        })
        .collect()
}
