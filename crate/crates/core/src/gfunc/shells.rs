//! Radial-cutoff evaluation: complete shells up to `S` plus the continuum tail.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{count_le, sum_integral_bound, LatticeSpec};
use crate::quad::{integrate_to_inf, QuadOptions};
use crate::sum::Compensated;

/// Physical kernel `1/(A k² + a) − χ(k² > μ)/(A|k − p|² + b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ShellKernel {
    pub a_coef: f64,
    pub a: f64,
    pub b: f64,
    pub p: [f64; 2],
    pub n_in: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ShellEvaluation {
    pub direct: f64,
    pub tail: f64,
    pub tail_bound: f64,
    pub cutoff_k2: f64,
}

/// `(4π)⁻¹ ∫_S^∞ ds ⟨1/(As + a) − 1/D⟩_angle`, exact in the angle.
pub(crate) fn continuum_tail(k: &ShellKernel, s: f64) -> f64 {
    let aa = k.a_coef;
    let p2 = k.p[0] * k.p[0] + k.p[1] * k.p[1];
    let bp = aa * p2 + k.b;
    let beta = 2.0 * aa * bp - 4.0 * aa * aa * p2;
    let q = aa * aa * s * s + beta * s + bp * bp;
    let root_minus = (beta * s + bp * bp) / (q.sqrt() + aa * s);
    let den = 4.0 * aa * (aa * s + k.a);
    let num_minus_den = 2.0 * aa * root_minus + beta - 4.0 * aa * k.a;
    (num_minus_den / den).ln_1p() / (4.0 * PI * aa)
}

fn majorant(k: &ShellKernel) -> impl Fn(f64) -> f64 + '_ {
    let p = (k.p[0] * k.p[0] + k.p[1] * k.p[1]).sqrt();
    let kk = (k.a_coef * p * p + k.b - k.a).abs();
    move |s: f64| {
        let r = s.sqrt();
        let d = k.a_coef * (r - p) * (r - p) + k.b;
        (2.0 * k.a_coef * p * r + kk) / ((k.a_coef * s + k.a) * d)
    }
}

pub(crate) fn shell_sum(spec: &LatticeSpec, k: &ShellKernel, cutoff: f64) -> Result<ShellEvaluation> {
    let n_s = spec.index_le(cutoff);
    let count = count_le(n_s);
    if count > spec.mode_cap() {
        return Err(Error::ResourceLimit { count, cap: spec.mode_cap() });
    }
    let kappa = spec.spacing();
    let k2 = spec.kappa2();
    let mut acc = Compensated::default();
    let imax = (n_s.max(0) as u64).isqrt() as i64;
    for i in -imax..=imax {
        let jmax = ((n_s - i * i) as u64).isqrt() as i64;
        let kx = kappa * i as f64;
        let dx = kx - k.p[0];
        for j in -jmax..=jmax {
            let n = i * i + j * j;
            let s = k2 * n as f64;
            let mut t = 1.0 / (k.a_coef * s + k.a);
            if n > k.n_in {
                let dy = kappa * j as f64 - k.p[1];
                t -= 1.0 / (k.a_coef * (dx * dx + dy * dy) + k.b);
            }
            acc.add(t);
        }
    }
    let direct = acc.value() * spec.inv_area();

    // Area-matched radius of the summed disk.
    let s_eff = k2 * count as f64 / PI;
    let tail = continuum_tail(k, s_eff);

    let first_out = k2 * (n_s + 1) as f64;
    let p = (k.p[0] * k.p[0] + k.p[1] * k.p[1]).sqrt();
    let lowest = s_eff.min(first_out);
    if lowest.sqrt() <= p
        || k.a_coef * lowest <= k.a
        || k.a_coef * (lowest.sqrt() - p).powi(2) + k.b <= 0.0
    {
        return Err(Error::Convergence(format!(
            "shell cutoff {cutoff} is too small for a monotone tail majorant"
        )));
    }
    let g = majorant(k);
    let opts = QuadOptions { abs_tol: 1e-18, rel_tol: 1e-10, max_intervals: 2000 };
    let int_a = integrate_to_inf(&g, first_out, opts)?.value;
    let int_b = integrate_to_inf(&g, s_eff, opts)?.value;
    let gap_bound = sum_integral_bound(&g, first_out, spec.box_side())?;
    let tail_bound = (int_a + int_b) / (4.0 * PI) + gap_bound;
    Ok(ShellEvaluation { direct, tail, tail_bound, cutoff_k2: k2 * n_s as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn tail_matches_two_dimensional_quadrature() {
        let k = ShellKernel { a_coef: 1.5, a: 1.0, b: 0.4, p: [0.3, -0.2], n_in: -1 };
        let s0 = 40.0;
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 4000 };
        let radial = |s: f64| {
            let r = s.sqrt();
            let inner = integrate(
                |th: f64| {
                    let (kx, ky) = (r * th.cos(), r * th.sin());
                    let d = k.a_coef * ((kx - k.p[0]).powi(2) + (ky - k.p[1]).powi(2)) + k.b;
                    1.0 / (k.a_coef * s + k.a) - 1.0 / d
                },
                0.0,
                2.0 * PI,
                opts,
            )
            .unwrap()
            .value;
            inner / (8.0 * PI * PI)
        };
        let direct = integrate_to_inf(radial, s0, QuadOptions { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 4000 })
            .unwrap()
            .value;
        assert!((continuum_tail(&k, s0) - direct).abs() < 1e-12);
    }
}
