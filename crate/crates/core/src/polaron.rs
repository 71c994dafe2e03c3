//! The polaron equation, its perturbed variant and the derived energy bands.
//!
//! The polaron energy `e_P < 0` is the lowest solution of
//!
//! ```text
//! e = −L⁻² Σ_{k² ≤ μ} 1 / G(k, −k² − e)
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gfunc::{g_continuum, g_lattice, PhysParams};
use crate::lattice::{fermi_sea_energy, orbit_reps, r2_table, OrbitRep};
use crate::roots::brent;
use crate::sum::pairwise;

/// Which `G` the Fermi-sea sum uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// The finite-box lattice sum.
    Lattice,
    /// Its `L → ∞` closed form, evaluated at the lattice momenta of the Fermi sea.
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance; `None` selects `1e-10 · max(|e|, scale)`.
    pub tol: Option<f64>,
    pub kernel: Kernel,
    /// Points of the logarithmic scan grid.
    pub grid_points: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: None, kernel: Kernel::Lattice, grid_points: 64 }
    }
}

impl SolverOptions {
    pub fn with_kernel(kernel: Kernel) -> Self {
        Self { kernel, ..Self::default() }
    }
}

/// A verified root of the polaron equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaronSolution {
    pub e_p: f64,
    pub residual: f64,
    pub tol: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub kernel: Kernel,
    pub wellcoupled: bool,
}

/// Scale `mμ/log μ̃` of the polaron energy, or `mμ` when `μ̃ ≤ e`.
pub fn energy_scale(p: &PhysParams) -> f64 {
    let mm = p.reduced_mass() * p.mu;
    let lm = p.mu_tilde().ln();
    if lm > 1.0 {
        mm / lm
    } else {
        mm
    }
}

/// Fermi-sea momenta with their multiplicities, grouped so that `G` is
/// evaluated once per group.
enum Sea {
    Orbits(Vec<OrbitRep>),
    Shells(Vec<(f64, u32)>),
}

impl Sea {
    fn new(p: &PhysParams, kernel: Kernel) -> Self {
        let n_mu = p.fermi_index();
        match kernel {
            Kernel::Lattice => Sea::Orbits(orbit_reps(n_mu)),
            Kernel::Continuum => {
                let k2 = p.spec.kappa2();
                let table = r2_table(n_mu.max(0) as u64);
                Sea::Shells(
                    table
                        .iter()
                        .enumerate()
                        .filter(|(_, &r)| r > 0)
                        .map(|(n, &r)| (k2 * n as f64, r))
                        .collect(),
                )
            }
        }
    }

    /// `(k², multiplicity)` per occupied shell.
    fn shells(&self, p: &PhysParams) -> Vec<(f64, u32)> {
        match self {
            Sea::Shells(v) => v.clone(),
            Sea::Orbits(reps) => {
                let k2 = p.spec.kappa2();
                let mut out: Vec<(f64, u32)> = Vec::new();
                let mut last = u64::MAX;
                for rep in reps {
                    if rep.n == last {
                        out.last_mut().unwrap().1 += rep.size;
                    } else {
                        out.push((rep.n as f64 * k2, rep.size));
                        last = rep.n;
                    }
                }
                out
            }
        }
    }

    fn largest_k2(&self, p: &PhysParams) -> f64 {
        match self {
            Sea::Orbits(v) => v.last().map_or(0.0, |r| r.n as f64 * p.spec.kappa2()),
            Sea::Shells(v) => v.last().map_or(0.0, |s| s.0),
        }
    }

    /// `(Σ w/G, Σ w/|G|, min G)` with `G` at `τ = shift − k²`, for momentum `k`.
    fn reciprocal_sum(&self, p: &PhysParams, shift: f64, at_origin: bool) -> Result<(f64, f64, f64)> {
        let eval: Vec<(f64, f64)> = match self {
            Sea::Orbits(reps) => {
                let kappa = p.spec.spacing();
                reps.par_iter()
                    .map(|r| {
                        let k = [kappa * r.i as f64, kappa * r.j as f64];
                        let k2 = r.n as f64 * p.spec.kappa2();
                        let q = if at_origin { [0.0, 0.0] } else { k };
                        Ok((r.size as f64, g_lattice(p, q, shift - k2)?.value))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Sea::Shells(shells) => shells
                .par_iter()
                .map(|&(k2, r)| {
                    let q2 = if at_origin { 0.0 } else { k2 };
                    Ok((r as f64, g_continuum(p, q2, shift - k2)?.value))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let terms: Vec<f64> = eval.iter().map(|&(w, g)| w / g).collect();
        let abs_terms: Vec<f64> = terms.iter().map(|t| t.abs()).collect();
        let min_g = eval.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        Ok((pairwise(&terms), pairwise(&abs_terms), min_g))
    }
}

struct PolaronFn<'a> {
    p: &'a PhysParams,
    sea: Sea,
    evaluations: usize,
}

impl PolaronFn<'_> {
    /// `(h(e), min_k G_k)` with `h(e) = e + L⁻² Σ 1/G(k, −k² − e)`.
    fn eval(&mut self, e: f64) -> Result<(f64, f64)> {
        self.evaluations += 1;
        let (s, _, min_g) = self.sea.reciprocal_sum(self.p, -e, false)?;
        Ok((e + self.p.spec.inv_area() * s, min_g))
    }
}

fn default_tol(opts: &SolverOptions, scale: f64) -> f64 {
    opts.tol.unwrap_or(1e-10 * scale)
}

/// Lowest negative solution of the polaron equation.
///
/// A logarithmic grid from `−10·scale` toward zero is scanned upward. On the
/// interval below the first zero of any `G_k` the root function is strictly
/// increasing, so the first upward sign change brackets the lowest root.
pub fn solve_polaron(p: &PhysParams, opts: &SolverOptions) -> Result<PolaronSolution> {
    let scale = energy_scale(p);
    let n = opts.grid_points.max(4);
    let mut f = PolaronFn { p, sea: Sea::new(p, opts.kernel), evaluations: 0 };

    let mut bottom = -10.0 * scale;
    let (mut h_lo, mut g_lo) = f.eval(bottom)?;
    let mut widen = 0;
    while !(h_lo < 0.0 && g_lo > 0.0) {
        widen += 1;
        if widen > 30 {
            return Err(Error::NoSolution {
                message: format!("root function stays nonnegative down to e = {bottom:e}"),
                grid: vec![(bottom, h_lo)],
            });
        }
        bottom *= 10.0;
        (h_lo, g_lo) = f.eval(bottom)?;
    }

    let ratio = (1e-6 * scale / -bottom).powf(1.0 / (n - 1) as f64);
    let mut grid = vec![(bottom, h_lo)];
    let mut lo = bottom;
    let mut bracket = None;
    for i in 1..n + 6 {
        // the last few points creep further toward zero
        let e = if i < n { bottom * ratio.powi(i as i32) } else { -1e-6 * scale * 1e-2f64.powi((i - n + 1) as i32) };
        let (h, g) = f.eval(e)?;
        grid.push((e, h));
        if g > 0.0 && h >= 0.0 {
            bracket = Some((lo, h_lo, e, h));
            break;
        }
        if g <= 0.0 {
            // a pole lies in (lo, e); h → +∞ from below it
            let (mut a, mut ha, mut hi) = (lo, h_lo, e);
            for _ in 0..200 {
                let mid = 0.5 * (a + hi);
                let (hm, gm) = f.eval(mid)?;
                grid.push((mid, hm));
                if gm <= 0.0 {
                    hi = mid;
                } else if hm >= 0.0 {
                    bracket = Some((a, ha, mid, hm));
                    break;
                } else {
                    (a, ha) = (mid, hm);
                }
            }
            break;
        }
        lo = e;
        h_lo = h;
    }
    let Some((a, fa, b, fb)) = bracket else {
        return Err(Error::NoSolution { message: "no sign change on the scan grid".into(), grid });
    };

    let tol = default_tol(opts, scale.max(a.abs()));
    let mut hh = |e: f64| match f.eval(e) {
        Ok((h, _)) => h,
        Err(_) => f64::NAN,
    };
    let root = brent(&mut hh, a, b, fa, fb, 1e-15 * scale, tol, 200)?;
    if !(root.fx.abs() <= tol) {
        return Err(Error::Convergence(format!("residual {:e} above tolerance {tol:e}", root.fx)));
    }
    Ok(PolaronSolution {
        e_p: root.x,
        residual: root.fx,
        tol,
        bracket: (root.lo, root.hi),
        evaluations: f.evaluations,
        kernel: opts.kernel,
        wellcoupled: p.wellcoupled(),
    })
}

/// Leading large-`μ̃` polaron energy and the width scale of its band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub leading: f64,
    pub band_scale: f64,
}

pub fn asymptotic_polaron(p: &PhysParams) -> Result<Asymptotics> {
    let lm = p.mu_tilde().ln();
    if !(lm > 0.0) {
        return Err(domain(format!("asymptotics need mu_tilde > 1, got {}", p.mu_tilde())));
    }
    Ok(Asymptotics { leading: -p.reduced_mass() * p.mu / lm, band_scale: p.mu / (lm * lm) })
}

/// Trial-state energy functional at `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialIdentity {
    /// `S · (1 + L⁻² S / e)` with `S = Σ_k 1/G(k, −k² − e)`.
    pub value: f64,
    /// `Σ_k |1/G_k|`, the natural scale of `value`.
    pub scale: f64,
}

pub fn trial_state_identity(p: &PhysParams, e: f64, kernel: Kernel) -> Result<TrialIdentity> {
    if !(e < 0.0) {
        return Err(domain(format!("trial identity needs e < 0, got {e}")));
    }
    let sea = Sea::new(p, kernel);
    let (s, abs_s, min_g) = sea.reciprocal_sum(p, -e, false)?;
    if min_g == 0.0 || !s.is_finite() {
        return Err(Error::Singular(format!("G vanishes at e = {e}")));
    }
    Ok(TrialIdentity { value: s * (1.0 + p.spec.inv_area() * s / e), scale: abs_s })
}

/// `E₀(μ) + e_P`, an upper bound on the interacting ground-state energy.
pub fn upper_bound_energy(p: &PhysParams, opts: &SolverOptions) -> Result<f64> {
    let sol = solve_polaron(p, opts)?;
    Ok(fermi_sea_energy(&p.spec, p.mu)? + sol.e_p)
}

/// Root of the perturbed polaron equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbedSolution {
    pub lambda: f64,
    pub r: f64,
    /// `E₀ + e_P − λ`.
    pub gap: f64,
    pub e_p: f64,
    pub fermi_energy: f64,
    pub residual: f64,
    pub tol: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Solves `E₀ − λ = L⁻² Σ_{k² ≤ μ} 1/(G(0, E₀ − λ − k²) − r)` with `λ ≤ E₀ + e_P`.
///
/// The unknown is `x = E₀ − λ ≥ |e_P|`; the right side decreases in `x`, so
/// the root is unique where every denominator is positive.
pub fn solve_perturbed(p: &PhysParams, r: f64, opts: &SolverOptions) -> Result<PerturbedSolution> {
    if !(r >= 0.0) {
        return Err(Error::Precondition(format!("r must be nonnegative, got {r}")));
    }
    let pol = solve_polaron(p, opts)?;
    solve_perturbed_from(p, r, &pol, opts)
}

/// [`solve_perturbed`] reusing an existing polaron solution.
pub fn solve_perturbed_from(
    p: &PhysParams,
    r: f64,
    pol: &PolaronSolution,
    opts: &SolverOptions,
) -> Result<PerturbedSolution> {
    if !(r >= 0.0) {
        return Err(Error::Precondition(format!("r must be nonnegative, got {r}")));
    }
    let e0 = fermi_sea_energy(&p.spec, p.mu)?;
    let sea = Sea::new(p, opts.kernel);
    let x_min = -pol.e_p;
    let k2_max = sea.largest_k2(p);
    let g_min = match opts.kernel {
        Kernel::Lattice => g_lattice(p, [0.0, 0.0], x_min - k2_max)?.value,
        Kernel::Continuum => g_continuum(p, 0.0, x_min - k2_max)?.value,
    };
    if !(g_min - r > 0.0) {
        return Err(Error::Regime(format!(
            "G(0, |e_P| - k²) - r = {:e} <= 0; mu_tilde = {} is too small for r = {r}",
            g_min - r,
            p.mu_tilde()
        )));
    }

    // G(0, ·) depends on k only through k², so both kernels sum over shells
    let shells = sea.shells(p);
    let mut evaluations = 0;
    let inv_area = p.spec.inv_area();
    let mut phi = |x: f64| -> Result<f64> {
        evaluations += 1;
        let shifted = match &sea {
            Sea::Orbits(_) => {
                let terms: Vec<f64> = shells
                    .par_iter()
                    .map(|&(k2, w)| Ok(w as f64 / (g_lattice(p, [0.0, 0.0], x - k2)?.value - r)))
                    .collect::<Result<Vec<_>>>()?;
                pairwise(&terms)
            }
            Sea::Shells(_) => {
                let terms: Vec<f64> = shells
                    .par_iter()
                    .map(|&(k2, w)| Ok(w as f64 / (g_continuum(p, 0.0, x - k2)?.value - r)))
                    .collect::<Result<Vec<_>>>()?;
                pairwise(&terms)
            }
        };
        Ok(x - inv_area * shifted)
    };

    let scale = energy_scale(p);
    let tol = default_tol(opts, scale.max(x_min));
    let f_lo = phi(x_min)?;
    if f_lo > tol {
        return Err(Error::NoSolution {
            message: format!("perturbed equation has no root with x >= |e_P| (phi = {f_lo:e})"),
            grid: vec![(x_min, f_lo)],
        });
    }
    let mut x_hi = x_min + 100.0 * scale;
    let mut f_hi = phi(x_hi)?;
    let mut widen = 0;
    while f_hi < 0.0 {
        widen += 1;
        if widen > 20 {
            return Err(Error::NoSolution {
                message: format!("phi stays negative up to x = {x_hi:e}"),
                grid: vec![(x_min, f_lo), (x_hi, f_hi)],
            });
        }
        x_hi = x_min + (x_hi - x_min) * 10.0;
        f_hi = phi(x_hi)?;
    }
    let root = if f_lo >= 0.0 {
        crate::roots::Root { x: x_min, fx: f_lo, lo: x_min, hi: x_min, evaluations: 0 }
    } else {
        let mut g = |x: f64| phi(x).unwrap_or(f64::NAN);
        brent(&mut g, x_min, x_hi, f_lo, f_hi, 1e-15 * scale, tol, 200)?
    };
    if !(root.fx.abs() <= tol) {
        return Err(Error::Convergence(format!("residual {:e} above tolerance {tol:e}", root.fx)));
    }
    let x = root.x.max(x_min);
    Ok(PerturbedSolution {
        lambda: e0 - x,
        r,
        gap: x - x_min,
        e_p: pol.e_p,
        fermi_energy: e0,
        residual: root.fx,
        tol,
        bracket: (e0 - root.hi, e0 - root.lo),
        evaluations: evaluations + root.evaluations,
    })
}

/// Window for the interacting ground-state energy: center `E₀ + e_P`,
/// half-width `C · |e_P|/log μ̃` for an unknown constant `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub center: f64,
    pub halfwidth_scale: f64,
    pub regime_ok: bool,
}

pub fn energy_window(p: &PhysParams, e_p: f64, c0: f64) -> Result<EnergyWindow> {
    let lm = p.mu_tilde().ln();
    if !(lm > 0.0) {
        return Err(domain(format!("band needs mu_tilde > 1, got {}", p.mu_tilde())));
    }
    Ok(EnergyWindow {
        center: fermi_sea_energy(&p.spec, p.mu)? + e_p,
        halfwidth_scale: e_p.abs() / lm,
        regime_ok: p.wellcoupled() && p.asymptotic(c0),
    })
}
