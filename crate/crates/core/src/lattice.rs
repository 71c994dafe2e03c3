//! The momentum lattice κℤ² of a square box with periodic boundary conditions.
//!
//! Every point is addressed by integers `(i, j)` with `k = κ(i, j)` and
//! `k² = κ²n`, `n = i² + j²`. Shell membership is always decided on `n`, never
//! on a floating `k²`, so boundary ties behave the same on every platform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_to_inf, QuadOptions};

/// Default ceiling on the number of lattice points any enumeration may touch.
pub const DEFAULT_MODE_CAP: u64 = 100_000_000;

const TIE_ULPS: f64 = 8.0 * f64::EPSILON;

/// Square box of side `L` and its dual lattice spacing `κ = 2π/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    box_side: f64,
    spacing: f64,
    mode_cap: u64,
}

impl LatticeSpec {
    pub fn new(box_side: f64) -> Result<Self> {
        if !(box_side > 0.0 && box_side.is_finite()) {
            return Err(Error::Precondition(format!("box side must be positive and finite, got {box_side}")));
        }
        Ok(Self { box_side, spacing: 2.0 * PI / box_side, mode_cap: DEFAULT_MODE_CAP })
    }

    pub fn with_mode_cap(mut self, cap: u64) -> Self {
        self.mode_cap = cap;
        self
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mode_cap(&self) -> u64 {
        self.mode_cap
    }

    pub fn kappa2(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// `1/L²`, the weight of one lattice point in a momentum average.
    pub fn inv_area(&self) -> f64 {
        1.0 / (self.box_side * self.box_side)
    }

    fn reduced(&self, energy: f64) -> f64 {
        energy * self.box_side * self.box_side / (4.0 * PI * PI)
    }

    /// Largest `n` with `κ²n ≤ energy`, or `-1` when no shell qualifies.
    ///
    /// Values within a few ulps above an integer count as that integer.
    pub fn index_le(&self, energy: f64) -> i64 {
        let x = self.reduced(energy);
        if x < 0.0 {
            return -1;
        }
        let n = x.floor();
        if (n + 1.0) - x <= TIE_ULPS * x.max(1.0) {
            n as i64 + 1
        } else {
            n as i64
        }
    }

    /// Largest `n` with `κ²n < energy`, or `-1`.
    pub fn index_lt(&self, energy: f64) -> i64 {
        let n = self.index_le(energy);
        if n < 0 {
            return -1;
        }
        let x = self.reduced(energy);
        if (n as f64 - x).abs() <= TIE_ULPS * x.max(1.0) {
            n - 1
        } else {
            n
        }
    }

    fn check_cap(&self, count: u64) -> Result<()> {
        if count > self.mode_cap {
            Err(Error::ResourceLimit { count, cap: self.mode_cap })
        } else {
            Ok(())
        }
    }
}

/// Number of integer points with `i² + j² ≤ n`; zero for negative `n`.
pub fn count_le(n: i64) -> u64 {
    if n < 0 {
        return 0;
    }
    let n = n as u64;
    let r = n.isqrt();
    let mut total = 2 * r + 1;
    for i in 1..=r {
        total += 2 * (2 * (n - i * i).isqrt() + 1);
    }
    total
}

/// `Σ (i² + j²)` over integer points with `i² + j² ≤ n`.
pub fn norm_sum_le(n: i64) -> u128 {
    if n < 0 {
        return 0;
    }
    let n = n as u64;
    let r = n.isqrt();
    let column = |i: u64| -> u128 {
        let j = (n - i * i).isqrt() as u128;
        (2 * j + 1) * (i as u128) * (i as u128) + j * (j + 1) * (2 * j + 1) / 3
    };
    let mut total = column(0);
    for i in 1..=r {
        total += 2 * column(i);
    }
    total
}

/// Canonical representative `(i, j)` with `i ≥ j ≥ 0` of a dihedral orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitRep {
    pub i: u32,
    pub j: u32,
    pub n: u64,
    pub size: u32,
}

impl OrbitRep {
    pub fn new(i: u32, j: u32) -> Self {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let size = if i == 0 {
            1
        } else if j == 0 || i == j {
            4
        } else {
            8
        };
        Self { i, j, n: i as u64 * i as u64 + j as u64 * j as u64, size }
    }

    /// All distinct images under the eight symmetries of the square, sorted.
    pub fn orbit(&self) -> Vec<(i64, i64)> {
        let (a, b) = (self.i as i64, self.j as i64);
        let mut pts = vec![
            (a, b),
            (-a, b),
            (a, -b),
            (-a, -b),
            (b, a),
            (-b, a),
            (b, -a),
            (-b, -a),
        ];
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

/// Orbit representatives with `n ≤ n_max`, ordered by `n` then `(i, j)`.
pub fn orbit_reps(n_max: i64) -> Vec<OrbitRep> {
    if n_max < 0 {
        return Vec::new();
    }
    let n_max = n_max as u64;
    let mut reps = Vec::new();
    for i in 0..=n_max.isqrt() {
        let jmax = (n_max - i * i).isqrt().min(i);
        for j in 0..=jmax {
            reps.push(OrbitRep::new(i as u32, j as u32));
        }
    }
    reps.sort_unstable_by_key(|r| (r.n, r.i, r.j));
    reps
}

/// Representation counts `r₂(n)` for `0 ≤ n ≤ n_max`.
pub fn r2_table(n_max: u64) -> Vec<u32> {
    let mut t = vec![0u32; n_max as usize + 1];
    for i in 0..=n_max.isqrt() {
        let jmax = (n_max - i * i).isqrt().min(i);
        for j in 0..=jmax {
            t[(i * i + j * j) as usize] += OrbitRep::new(i as u32, j as u32).size;
        }
    }
    t
}

/// Integer points of the lattice with `k² ≤ cutoff`, ordered by `k²` and then
/// lexicographically.
pub fn enumerate_indices(spec: &LatticeSpec, cutoff: f64) -> Result<Vec<(i64, i64)>> {
    if !(cutoff >= 0.0) {
        return Err(Error::Precondition(format!("cutoff must be nonnegative, got {cutoff}")));
    }
    let n_max = spec.index_le(cutoff);
    spec.check_cap(count_le(n_max))?;
    let mut pts: Vec<(i64, i64)> = orbit_reps(n_max).iter().flat_map(|r| r.orbit()).collect();
    pts.sort_by_key(|&(i, j)| (i * i + j * j, i, j));
    Ok(pts)
}

/// Momenta `k ∈ κℤ²` with `k² ≤ cutoff` in canonical order.
pub fn enumerate_modes(spec: &LatticeSpec, cutoff: f64) -> Result<Vec<[f64; 2]>> {
    let kappa = spec.spacing();
    Ok(enumerate_indices(spec, cutoff)?
        .into_iter()
        .map(|(i, j)| [kappa * i as f64, kappa * j as f64])
        .collect())
}

/// `N(μ)`, the number of momenta with `k² ≤ μ`.
pub fn count_modes(spec: &LatticeSpec, mu: f64) -> Result<u64> {
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
    }
    let count = count_le(spec.index_le(mu));
    spec.check_cap(count)?;
    Ok(count)
}

/// `E₀(μ) = Σ_{k² ≤ μ} k²`.
pub fn fermi_sea_energy(spec: &LatticeSpec, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
    }
    let n = spec.index_le(mu);
    spec.check_cap(count_le(n))?;
    Ok(spec.kappa2() * norm_sum_le(n) as f64)
}

/// Sum of `f(k²)` over the closed shell band `a ≤ k² ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSum {
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub mode_count: u64,
}

pub fn shell_sum<F: Fn(f64) -> f64>(spec: &LatticeSpec, lower: f64, upper: f64, f: F) -> Result<ShellSum> {
    if !(upper > lower && lower >= 0.0) {
        return Err(Error::Precondition(format!("need upper > lower >= 0, got [{lower}, {upper}]")));
    }
    let lo = spec.index_lt(lower) + 1;
    let hi = spec.index_le(upper);
    let mode_count = count_le(hi) - count_le(lo - 1);
    spec.check_cap(mode_count)?;
    let mut value = 0.0;
    if hi >= lo {
        let table = r2_table(hi as u64);
        let k2 = spec.kappa2();
        for n in lo..=hi {
            let r = table[n as usize];
            if r > 0 {
                value += r as f64 * f(k2 * n as f64);
            }
        }
    }
    Ok(ShellSum { lower, upper, value, mode_count })
}

/// Comparison of a lattice average with its continuum integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumIntegralCertificate {
    pub lattice_sum: f64,
    pub integral: f64,
    pub bound: f64,
    /// Uncertainty of `lattice_sum` from closing the sum with an integral.
    pub tail_uncertainty: f64,
    /// Shells with `k²` below this were summed directly.
    pub direct_cutoff: f64,
    pub holds: bool,
}

const CERT_SHELL_BUDGET: u64 = 1 << 20;

fn half_line_integral<F: Fn(f64) -> f64>(f: &F, from: f64, what: &str) -> Result<f64> {
    let r = integrate_to_inf(f, from, QuadOptions { abs_tol: 1e-16, rel_tol: 1e-12, max_intervals: 2000 })
        .map_err(|e| Error::Divergence(format!("{what} from {from}: {e}")))?;
    if !r.value.is_finite() {
        return Err(Error::Divergence(format!("{what} from {from} is not finite")));
    }
    Ok(r.value)
}

/// Right-hand side of the sum-versus-integral bound for a tail starting at `m`.
///
/// `m = 0` uses the sharper constant available for the full lattice.
pub fn sum_integral_bound<F: Fn(f64) -> f64>(f: &F, m: f64, box_side: f64) -> Result<f64> {
    let on_line = |t: f64| f(t * t);
    let line = half_line_integral(&on_line, m.sqrt(), "line integral")?;
    let l = box_side;
    if m == 0.0 {
        Ok(2.0 / (PI * l) * line + 3.0 * f(0.0) / (l * l))
    } else {
        Ok(2.0 / (PI * l) * line + (4.0 * m.sqrt() / (PI * l) + 6.0 / (l * l)) * f(m))
    }
}

/// Checks `|L⁻²Σ_{k²≥m} f(k²) − (2π)⁻¹∫_{√m}^∞ f(t²)t dt|` against its bound.
///
/// Shells are summed exactly up to a cutoff `S` and the remainder is replaced
/// by its integral, whose own error is bounded by the same estimate at `S`.
/// `holds` compares the worst case of the closed sum against the bound.
pub fn sum_integral_certificate<F: Fn(f64) -> f64>(
    f: F,
    m: f64,
    spec: &LatticeSpec,
) -> Result<SumIntegralCertificate> {
    if !(m >= 0.0) {
        return Err(Error::Precondition(format!("m must be nonnegative, got {m}")));
    }
    let n_start = spec.index_lt(m) + 1;
    let n_end = CERT_SHELL_BUDGET.max(16 * n_start.max(1) as u64);
    spec.check_cap(count_le(n_end as i64))?;
    let k2 = spec.kappa2();
    let cutoff = k2 * n_end as f64;

    let table = r2_table(n_end);
    let mut direct = 0.0;
    let mut prev = f(m);
    if !(prev >= 0.0) || !prev.is_finite() {
        return Err(Error::Contract(format!("f({m}) = {prev} is not a finite nonnegative value")));
    }
    for n in n_start..n_end as i64 {
        let r = table[n as usize];
        if r == 0 {
            continue;
        }
        let s = k2 * n as f64;
        let v = f(s);
        if !(v >= 0.0) || v > prev * (1.0 + 1e-12) + f64::MIN_POSITIVE {
            return Err(Error::Contract(format!("f is not nonnegative and nonincreasing near s = {s}")));
        }
        prev = v;
        direct += r as f64 * v;
    }
    let inv_area = spec.inv_area();
    let quarter = 1.0 / (4.0 * PI);
    let tail = quarter * half_line_integral(&f, cutoff, "tail integral")?;
    let tail_uncertainty = sum_integral_bound(&f, cutoff, spec.box_side())?;
    let lattice_sum = inv_area * direct + tail;
    let integral = quarter * half_line_integral(&f, m, "integral")?;
    let bound = sum_integral_bound(&f, m, spec.box_side())?;
    let holds = (lattice_sum - integral).abs() + tail_uncertainty <= bound;
    Ok(SumIntegralCertificate { lattice_sum, integral, bound, tail_uncertainty, direct_cutoff: cutoff, holds })
}

/// Density of lattice points in the half-open band `aμ ≤ k² < bμ` against
/// the area law, with the matching counting bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellCountCheck {
    pub count_density: f64,
    pub reference: f64,
    pub bound: f64,
    pub mode_count: u64,
    pub holds: bool,
}

pub fn shell_count_bound(spec: &LatticeSpec, a: f64, b: f64, mu: f64) -> Result<ShellCountCheck> {
    if !(b > a && a >= 0.0) {
        return Err(Error::Precondition(format!("need b > a >= 0, got a = {a}, b = {b}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
    }
    let mode_count = count_le(spec.index_lt(b * mu)) - count_le(spec.index_lt(a * mu));
    spec.check_cap(mode_count)?;
    let l = spec.box_side();
    let count_density = mode_count as f64 * spec.inv_area();
    let reference = (b - a) * mu / (4.0 * PI);
    let bound = 2.0 / (PI * l) * ((a * mu).sqrt() + (b * mu).sqrt()) + 6.0 / (l * l);
    let holds = (count_density - reference).abs() <= bound;
    Ok(ShellCountCheck { count_density, reference, bound, mode_count, holds })
}
