//! Exact evaluation of the renormalized lattice sum column by column.
//!
//! In lattice units the sum reads
//!
//! ```text
//! S = Σ_{(i,j)} [ 1/(i² + j² + α₀) − χ(i² + j² > n_in) / ((i − cx)² + (j − cy)² + β₀) ]
//! ```
//!
//! Each column `i` is a one-dimensional sum over `j` with closed forms for the
//! full line and an Euler–Maclaurin tail for the half lines outside the disk.
//! Columns beyond `N` are resummed with the same expansion in `i`.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::sum::Compensated;

/// Dimensionless parameters of one lattice sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ColumnKernel {
    pub alpha0: f64,
    pub beta0: f64,
    pub cx: f64,
    pub cy: f64,
    /// Points with `i² + j² ≤ n_in` carry no subtraction; `-1` for none.
    pub n_in: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ColumnSum {
    pub value: f64,
    pub far: f64,
    pub far_bound: f64,
    pub columns: i64,
}

const EM_START: f64 = 16.0;
const MIN_COLUMNS: i64 = 64;

/// `Σ_{j∈ℤ} 1/(j² + α)` for `α > 0`.
pub(crate) fn line_sum_centered(alpha: f64) -> f64 {
    let d = alpha.sqrt();
    PI / (d * (PI * d).tanh())
}

/// `Σ_{j∈ℤ} 1/((j − c)² + β)`, finite whenever no term is singular.
pub(crate) fn line_sum_shifted(c: f64, beta: f64) -> f64 {
    let c = c - c.round();
    if beta > 0.0 {
        let d = beta.sqrt();
        let y = 2.0 * PI * d;
        let s = (PI * c).sin();
        let em = (-y).exp_m1();
        (PI / d) * (-(-2.0 * y).exp_m1()) / (em * em + 4.0 * (-y).exp() * s * s)
    } else if beta < 0.0 {
        let delta = (-beta).sqrt();
        PI * (2.0 * PI * delta).sin() / (2.0 * delta * (PI * (c + delta)).sin() * (PI * (c - delta)).sin())
    } else {
        let s = (PI * c).sin();
        PI * PI / (s * s)
    }
}

/// `Σ_{n≥0} 1/((x₀ + n)² + β)`, assuming every term is positive.
pub(crate) fn half_line(x0: f64, beta: f64) -> f64 {
    let pole = if beta < 0.0 { (-beta).sqrt() } else { 0.0 };
    let start = EM_START + pole;
    let mut acc = Compensated::default();
    let mut n = 0.0;
    let mut x = x0;
    while x < start {
        acc.add(1.0 / (x * x + beta));
        n += 1.0;
        x = x0 + n;
    }
    let r = x * x + beta;
    let z = beta / (x * x);
    let integral = if z > 0.0 {
        z.sqrt().atan() / (z.sqrt() * x)
    } else if z < 0.0 {
        (-z).sqrt().atanh() / ((-z).sqrt() * x)
    } else {
        1.0 / x
    };
    let r2 = r * r;
    let f = 1.0 / r;
    let f1 = -2.0 * x / r2;
    let f3 = 24.0 * x * (beta - x * x) / (r2 * r2);
    let f5 = -240.0 * x * (x * x - 3.0 * beta) * (3.0 * x * x - beta) / (r2 * r2 * r2);
    acc.add(integral);
    acc.add(0.5 * f - f1 / 12.0 + f3 / 720.0 - f5 / 30240.0);
    acc.value()
}

/// `[u, u', u''', u⁽⁵⁾]` for `u(y) = (y² + β)^{-1/2}`.
fn inv_sqrt_derivs(y: f64, beta: f64) -> [f64; 4] {
    let r = y * y + beta;
    let u = 1.0 / r.sqrt();
    let u3 = u * u * u;
    let u7 = u3 * u3 * u;
    let u11 = u7 * u3 * u;
    [
        u,
        -y * u3,
        -3.0 * y * (2.0 * y * y - 3.0 * beta) * u7,
        -15.0 * y * (8.0 * y.powi(4) - 40.0 * beta * y * y + 15.0 * beta * beta) * u11,
    ]
}

/// `∫_X^∞ [(t² + α)^{-1/2} − ((t − c)² + β)^{-1/2}] dt`.
fn far_integral(x: f64, alpha: f64, beta: f64, c: f64) -> f64 {
    let ra = (x * x + alpha).sqrt();
    let rb = ((x - c) * (x - c) + beta).sqrt();
    let p = x + ra;
    let diff = -c + (-2.0 * x * c + c * c + beta - alpha) / (ra + rb);
    (diff / p).ln_1p()
}

/// `π Σ_{i≥X} [2u₀(i) − u_c(i) − u_{−c}(i)]` by Euler–Maclaurin.
fn far_columns(x: f64, k: &ColumnKernel) -> f64 {
    let a = inv_sqrt_derivs(x, k.alpha0);
    let p = inv_sqrt_derivs(x - k.cx, k.beta0);
    let m = inv_sqrt_derivs(x + k.cx, k.beta0);
    let g: Vec<f64> = (0..4).map(|n| 2.0 * a[n] - p[n] - m[n]).collect();
    let integral = far_integral(x, k.alpha0, k.beta0, k.cx) + far_integral(x, k.alpha0, k.beta0, -k.cx);
    PI * (integral + 0.5 * g[0] - g[1] / 12.0 + g[2] / 720.0 - g[3] / 30240.0)
}

fn column(i: i64, k: &ColumnKernel) -> f64 {
    let fi = i as f64;
    let free = line_sum_centered(fi * fi + k.alpha0);
    let dx = fi - k.cx;
    let beta = dx * dx + k.beta0;
    let i2 = i * i;
    let outside = if i2 > k.n_in {
        line_sum_shifted(k.cy, beta)
    } else {
        let j = (k.n_in - i2).isqrt() as f64;
        half_line(j + 1.0 - k.cy, beta) + half_line(j + 1.0 + k.cy, beta)
    };
    free - outside
}

pub(crate) fn column_count(k: &ColumnKernel) -> i64 {
    let disk = if k.n_in >= 0 { k.n_in.isqrt() + 1 } else { 0 };
    let shift = (2.0 * k.cx.abs() + 2.0 * (-k.beta0).max(0.0).sqrt() + 2.0).ceil() as i64;
    disk.max(shift).max(MIN_COLUMNS)
}

pub(crate) fn column_sum(k: &ColumnKernel) -> Result<ColumnSum> {
    let n = column_count(k);
    let mut acc = Compensated::default();
    for i in (1..=n).rev() {
        acc.add(column(i, k));
        acc.add(column(-i, k));
    }
    acc.add(column(0, k));
    let far = far_columns((n + 1) as f64, k);
    acc.add(far);
    let value = acc.value();
    if !value.is_finite() {
        return Err(domain(format!(
            "lattice sum is singular (alpha0 = {}, beta0 = {}, c = ({}, {}))",
            k.alpha0, k.beta0, k.cx, k.cy
        )));
    }
    let nf = n as f64;
    let kk = (k.cx * k.cx + k.beta0 - k.alpha0).abs();
    let far_bound = 2.0 * PI * (8.0 * k.cx.abs() / nf + 2.0 * kk / (nf * nf)) + 16.0 * PI * (-PI * nf).exp();
    Ok(ColumnSum { value, far, far_bound, columns: n })
}
