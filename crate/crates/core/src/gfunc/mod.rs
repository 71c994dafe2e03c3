//! The renormalized pair function `G(q, τ)` on the lattice and in the
//! thermodynamic limit.
//!
//! Units: ħ = 1 and fermion kinetic energy `k²`. With `m = (M+1)/M`,
//!
//! ```text
//! G(q, τ) = L⁻² Σ_k [ 1/(m k² + |E_B|) − χ(k² > μ) / ((q − k)²/M + k² + τ) ]
//! ```

mod columns;
mod continuum;
mod shells;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{r2_table, LatticeSpec};

pub use continuum::{f_kernel, g_continuum, poisson_residual, ContinuumG, PoissonRow};

/// Physical parameters of one impurity-in-a-box problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub mass_ratio: f64,
    pub binding: f64,
    pub mu: f64,
    pub spec: LatticeSpec,
}

impl PhysParams {
    pub fn new(mass_ratio: f64, binding: f64, mu: f64, spec: LatticeSpec) -> Result<Self> {
        if !(mass_ratio > 0.0 && mass_ratio.is_finite()) {
            return Err(Error::Precondition(format!("mass ratio must be positive, got {mass_ratio}")));
        }
        if !(binding < 0.0 && binding.is_finite()) {
            return Err(Error::Precondition(format!("binding energy must be negative, got {binding}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
        }
        Ok(Self { mass_ratio, binding, mu, spec })
    }

    /// Parameters from `μ̃ = μ/|E_B|` and the box side.
    pub fn from_mu_tilde(mass_ratio: f64, binding: f64, mu_tilde: f64, box_side: f64) -> Result<Self> {
        Self::new(mass_ratio, binding, mu_tilde * binding.abs(), LatticeSpec::new(box_side)?)
    }

    pub fn with_box(&self, box_side: f64) -> Result<Self> {
        Ok(Self { spec: LatticeSpec::new(box_side)?.with_mode_cap(self.spec.mode_cap()), ..*self })
    }

    /// `m = (M + 1)/M`.
    pub fn reduced_mass(&self) -> f64 {
        (self.mass_ratio + 1.0) / self.mass_ratio
    }

    pub fn abs_binding(&self) -> f64 {
        -self.binding
    }

    /// `μ̃ = μ/|E_B|`.
    pub fn mu_tilde(&self) -> f64 {
        self.mu / self.abs_binding()
    }

    /// `L²|E_B| ≥ 1`.
    pub fn wellcoupled(&self) -> bool {
        self.spec.box_side().powi(2) * self.abs_binding() >= 1.0
    }

    /// `μ̃ ≥ c₀`.
    pub fn asymptotic(&self, c0: f64) -> bool {
        self.mu_tilde() >= c0
    }

    /// Largest shell index inside the Fermi sea.
    pub fn fermi_index(&self) -> i64 {
        self.spec.index_le(self.mu)
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if !(tau > -self.mu) || !tau.is_finite() {
            return Err(domain(format!("tau = {tau} must exceed -mu = {}", -self.mu)));
        }
        Ok(())
    }
}

/// One evaluation of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GEvaluation {
    pub value: f64,
    /// Largest `k²` treated by direct summation.
    pub cutoff_k2: f64,
    /// Contribution included in `value` from beyond the direct region.
    pub tail_correction: f64,
    /// Rigorous bound on `|tail_correction|` for columns; for shells, on the
    /// error of the continuum tail.
    pub tail_bound: f64,
}

/// How the infinite sum is closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailPolicy {
    /// Closed-form line sums per lattice column; exact up to rounding.
    Columns,
    /// Complete shells up to `factor · μ` and the angular-exact continuum tail.
    Shells { factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GOptions {
    pub policy: TailPolicy,
    /// Reject evaluations whose tail bound exceeds this.
    pub max_tail_bound: f64,
}

impl Default for GOptions {
    fn default() -> Self {
        Self { policy: TailPolicy::Columns, max_tail_bound: f64::INFINITY }
    }
}

/// Kernel of the free pair propagator in the truncated sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncationKernel {
    /// `1/(k² − E_B) − χ/(k² + τ)`.
    MassFree,
    /// `1/(m k² − E_B) − χ/(m k² + τ)`, the `q = 0` case of `G`.
    Reduced,
}

impl TruncationKernel {
    fn coefficient(self, p: &PhysParams) -> f64 {
        match self {
            TruncationKernel::MassFree => 1.0,
            TruncationKernel::Reduced => p.reduced_mass(),
        }
    }
}

fn evaluate(
    p: &PhysParams,
    a_coef: f64,
    shift: [f64; 2],
    b: f64,
    opts: &GOptions,
) -> Result<GEvaluation> {
    let spec = &p.spec;
    let a = p.abs_binding();
    let n_in = p.fermi_index();
    let ev = match opts.policy {
        TailPolicy::Columns => {
            let scale = a_coef * spec.kappa2();
            let kappa = spec.spacing();
            let k = columns::ColumnKernel {
                alpha0: a / scale,
                beta0: b / scale,
                cx: shift[0] / kappa,
                cy: shift[1] / kappa,
                n_in,
            };
            let s = columns::column_sum(&k)?;
            let unit = spec.inv_area() / scale;
            GEvaluation {
                value: s.value * unit,
                cutoff_k2: spec.kappa2() * (s.columns * s.columns) as f64,
                tail_correction: s.far * unit,
                tail_bound: s.far_bound * unit,
            }
        }
        TailPolicy::Shells { factor } => {
            if !(factor >= 1.0) {
                return Err(Error::Precondition(format!("shell factor must be at least 1, got {factor}")));
            }
            let k = shells::ShellKernel { a_coef, a, b, p: shift, n_in };
            let s = shells::shell_sum(spec, &k, factor * p.mu)?;
            GEvaluation {
                value: s.direct + s.tail,
                cutoff_k2: s.cutoff_k2,
                tail_correction: s.tail,
                tail_bound: s.tail_bound,
            }
        }
    };
    if ev.tail_bound > opts.max_tail_bound {
        return Err(Error::Convergence(format!(
            "tail bound {:e} exceeds requested {:e}",
            ev.tail_bound, opts.max_tail_bound
        )));
    }
    Ok(ev)
}

/// `G(q, τ)` on the lattice with the default exact column policy.
pub fn g_lattice(p: &PhysParams, q: [f64; 2], tau: f64) -> Result<GEvaluation> {
    g_lattice_with(p, q, tau, &GOptions::default())
}

pub fn g_lattice_with(p: &PhysParams, q: [f64; 2], tau: f64, opts: &GOptions) -> Result<GEvaluation> {
    p.check_tau(tau)?;
    let mp1 = p.mass_ratio + 1.0;
    let q2 = q[0] * q[0] + q[1] * q[1];
    let shift = [q[0] / mp1, q[1] / mp1];
    evaluate(p, p.reduced_mass(), shift, q2 / mp1 + tau, opts)
}

/// Truncated `G(0, τ)` over `k² ≤ n` with the chosen kernel.
pub fn g_truncated(p: &PhysParams, n: f64, tau: f64, kernel: TruncationKernel) -> Result<f64> {
    p.check_tau(tau)?;
    if !(n >= p.mu) {
        return Err(domain(format!("truncation n = {n} must be at least mu = {}", p.mu)));
    }
    let spec = &p.spec;
    let n_max = spec.index_le(n);
    let count = crate::lattice::count_le(n_max);
    if count > spec.mode_cap() {
        return Err(Error::ResourceLimit { count, cap: spec.mode_cap() });
    }
    let n_in = p.fermi_index();
    let a_coef = kernel.coefficient(p);
    let a = p.abs_binding();
    let k2 = spec.kappa2();
    let table = r2_table(n_max as u64);
    let mut acc = crate::sum::Compensated::default();
    for (idx, &r) in table.iter().enumerate() {
        if r == 0 {
            continue;
        }
        let s = k2 * idx as f64;
        let mut t = 1.0 / (a_coef * s + a);
        if idx as i64 > n_in {
            t -= 1.0 / (a_coef * s + tau);
        }
        acc.add(r as f64 * t);
    }
    Ok(acc.value() * spec.inv_area())
}

/// The `n → ∞` limit of [`g_truncated`] for the same kernel.
pub fn g_truncation_limit(p: &PhysParams, tau: f64, kernel: TruncationKernel) -> Result<GEvaluation> {
    p.check_tau(tau)?;
    evaluate(p, kernel.coefficient(p), [0.0, 0.0], tau, &GOptions::default())
}

/// Smooth occupation cutoff: 0 up to `μ`, 1 beyond `μ + μ/log μ̃`, cosine ramp between.
pub fn xi_mu(s: f64, mu: f64, mu_tilde: f64) -> Result<f64> {
    if !(mu_tilde > 1.0) {
        return Err(domain(format!("smoothed cutoff needs mu_tilde > 1, got {mu_tilde}")));
    }
    let width = mu / mu_tilde.ln();
    Ok(if s <= mu {
        0.0
    } else if s >= mu + width {
        1.0
    } else {
        0.5 - 0.5 * (PI * (s - mu) / width).cos()
    })
}

/// `L⁻² Σ (1 − ξ_μ(k²))/D(k)` over the ramp, i.e. `G̃ − G`.
pub fn smoothing_difference(p: &PhysParams, q: [f64; 2], tau: f64) -> Result<f64> {
    p.check_tau(tau)?;
    let mt = p.mu_tilde();
    if !(mt > 1.0) {
        return Err(domain(format!("smoothed cutoff needs mu_tilde > 1, got {mt}")));
    }
    let spec = &p.spec;
    let n_in = p.fermi_index();
    let n_hi = spec.index_le(p.mu + p.mu / mt.ln());
    let kappa = spec.spacing();
    let k2 = spec.kappa2();
    let inv_m = 1.0 / p.mass_ratio;
    let mut acc = crate::sum::Compensated::default();
    let imax = (n_hi.max(0) as u64).isqrt() as i64;
    for i in -imax..=imax {
        let jmax = ((n_hi - i * i) as u64).isqrt() as i64;
        for j in -jmax..=jmax {
            let n = i * i + j * j;
            if n <= n_in {
                continue;
            }
            let s = k2 * n as f64;
            let w = 1.0 - xi_mu(s, p.mu, mt)?;
            if w == 0.0 {
                continue;
            }
            let (kx, ky) = (kappa * i as f64, kappa * j as f64);
            let d = ((q[0] - kx).powi(2) + (q[1] - ky).powi(2)) * inv_m + s + tau;
            acc.add(w / d);
        }
    }
    Ok(acc.value() * spec.inv_area())
}

/// `G` with the sharp Fermi-sea cutoff replaced by [`xi_mu`].
pub fn g_smoothed(p: &PhysParams, q: [f64; 2], tau: f64) -> Result<GEvaluation> {
    let diff = smoothing_difference(p, q, tau)?;
    let mut ev = g_lattice(p, q, tau)?;
    ev.value += diff;
    Ok(ev)
}

/// `(4πm)⁻¹ log((q²/(M+1) + mμ + τ)/|E_B|)`, the leading large-μ̃ form of `G`.
pub fn log_reference(p: &PhysParams, q2: f64, tau: f64) -> Result<f64> {
    p.check_tau(tau)?;
    let m = p.reduced_mass();
    let arg = (q2 / (p.mass_ratio + 1.0) + m * p.mu + tau) / p.abs_binding();
    Ok(arg.ln() / (4.0 * PI * m))
}

/// `(1 + μ/((μ + τ) log μ̃))³`, the growth allowed for the discrepancy.
pub fn log_band_weight(p: &PhysParams, tau: f64) -> Result<f64> {
    p.check_tau(tau)?;
    let lm = p.mu_tilde().ln();
    if !(lm > 0.0) {
        return Err(domain(format!("band needs mu_tilde > 1, got {}", p.mu_tilde())));
    }
    Ok((1.0 + p.mu / ((p.mu + tau) * lm)).powi(3))
}

/// `|G − reference| / weight` at one point.
pub fn log_band_discrepancy(p: &PhysParams, q: [f64; 2], tau: f64) -> Result<f64> {
    let g = g_lattice(p, q, tau)?.value;
    let reference = log_reference(p, q[0] * q[0] + q[1] * q[1], tau)?;
    Ok((g - reference).abs() / log_band_weight(p, tau)?)
}
