//! Mass-ratio stability functionals and the critical mass ratio.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::roots::bisect;

/// Default absolute tolerance of the `α` quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

fn check_mass(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("mass ratio must be positive, got {m}")))
    }
}

/// Largest `ε` (exclusive) for which `β` has positive numerator and denominator on `[0, 1]`.
pub fn epsilon_max(m: f64) -> Result<f64> {
    check_mass(m)?;
    let mm = m * (m + 2.0);
    // both conditions are tightest at u = 0
    let numerator = mm / (mm + m + 1.0);
    let denominator = (m + 1.0 + mm) / (2.0 * (m + 1.0) + mm);
    Ok(numerator.min(denominator).powi(2))
}

fn check_epsilon(m: f64, eps: f64) -> Result<()> {
    check_mass(m)?;
    let cap = epsilon_max(m)?;
    if !(eps >= 0.0 && eps < cap) {
        return Err(domain(format!("epsilon = {eps} outside [0, {cap}) for M = {m}")));
    }
    Ok(())
}

/// The unclipped ratio inside `β`'s minimum.
fn beta_ratio(u: f64, eps: f64, m: f64) -> f64 {
    let se = eps.sqrt();
    let v = m + 1.0 - u;
    let mm = m * (m + 2.0);
    v * (m + 2.0) * (1.0 - (1.0 + v / mm) * se) / (v * (1.0 - 2.0 * se) + mm * (1.0 - se))
}

/// `β(u, ε) ∈ (0, 1]`.
pub fn beta_u(u: f64, eps: f64, m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Precondition(format!("u must lie in [0, 1], got {u}")));
    }
    check_epsilon(m, eps)?;
    Ok(beta_ratio(u, eps, m).min(1.0))
}

/// Location in `(0, 1)` where the ratio crosses 1, if it does.
fn beta_kink(eps: f64, m: f64) -> Option<f64> {
    let g = |u: f64| beta_ratio(u, eps, m) - 1.0;
    let (g0, g1) = (g(0.0), g(1.0));
    if g0 == 0.0 || g1 == 0.0 || (g0 > 0.0) == (g1 > 0.0) {
        return None;
    }
    bisect(g, 0.0, 1.0, 1e-15, 200).ok().map(|r| r.x)
}

/// `α(M, ε)` by adaptive quadrature with a breakpoint at `β`'s kink.
pub fn alpha_m(m: f64, eps: f64, quad_tol: f64) -> Result<f64> {
    check_epsilon(m, eps)?;
    if !(quad_tol > 0.0) {
        return Err(Error::Precondition(format!("quadrature tolerance must be positive, got {quad_tol}")));
    }
    let c = m * (1.0 - eps.sqrt()) + 1.0;
    let mut points = vec![0.0];
    points.extend(beta_kink(eps, m));
    points.push(1.0);
    let r = integrate_with_breaks(
        |u| 1.0 / (beta_ratio(u, eps, m).min(1.0) * (c - u)),
        &points,
        QuadOptions { abs_tol: quad_tol, rel_tol: 0.0, max_intervals: 4000 },
    )?;
    Ok(0.5 * (1.0 / c + r.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub mass_ratio: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub margin: f64,
    pub condition_holds: bool,
}

/// `(1 − ε^{1/3}) M/(M+1) − α(M, ε)/(1 − ε)`.
pub fn stability_margin(m: f64, eps: f64, quad_tol: f64) -> Result<StabilityResult> {
    let alpha = alpha_m(m, eps, quad_tol)?;
    let margin = (1.0 - eps.cbrt()) * m / (m + 1.0) - alpha / (1.0 - eps);
    Ok(StabilityResult { mass_ratio: m, epsilon: eps, alpha, margin, condition_holds: margin >= 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalMass {
    pub m_star: f64,
    pub bracket: (f64, f64),
    pub margin_lo: f64,
    pub margin_hi: f64,
}

/// Zero of the stability margin in `M`, searched on `[1, 2]` and then `[0.5, 5]`.
pub fn critical_mass(eps: f64, tol: f64, quad_tol: f64) -> Result<CriticalMass> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let margin = |m: f64| stability_margin(m, eps, quad_tol).map(|s| s.margin);
    let mut last = (0.0, 0.0);
    for (lo, hi) in [(1.0, 2.0), (0.5, 5.0)] {
        last = (lo, hi);
        let (flo, fhi) = (margin(lo)?, margin(hi)?);
        if (flo < 0.0) == (fhi < 0.0) {
            continue;
        }
        let mut failure = None;
        let root = bisect(
            |m| match margin(m) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            tol,
            200,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        return Ok(CriticalMass {
            m_star: 0.5 * (root.lo + root.hi),
            bracket: (root.lo, root.hi),
            margin_lo: margin(root.lo)?,
            margin_hi: margin(root.hi)?,
        });
    }
    Err(Error::Bracket { lo: last.0, hi: last.1 })
}

/// Error budget `ε^{-1/2}(ε^{-1/2} + √log μ̃ + ε log μ̃)` of the momentum decomposition.
pub fn k_error(eps: f64, mu_tilde: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain(format!("epsilon must be positive, got {eps}")));
    }
    if !(mu_tilde > 1.0) {
        return Err(domain(format!("mu_tilde must exceed 1, got {mu_tilde}")));
    }
    let lm = mu_tilde.ln();
    let r = 1.0 / eps.sqrt();
    Ok(r * (r + lm.sqrt() + eps * lm))
}
