//! Bracketing root finders.

use crate::error::{Error, Result};

/// A refined root with the bracket that certifies it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

fn opposite(a: f64, b: f64) -> bool {
    (a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0)
}

/// Plain bisection on `[lo, hi]` until the bracket is narrower than `xtol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<Root> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if !opposite(flo, fhi) {
        return Err(Error::NoSolution {
            message: format!("f({lo}) = {flo} and f({hi}) = {fhi} share a sign"),
            grid: vec![(lo, flo), (hi, fhi)],
        });
    }
    let mut evaluations = 2;
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
    for _ in 0..max_iter {
        if (hi - lo).abs() <= xtol || best.1 == 0.0 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        evaluations += 1;
        if fm.abs() <= best.1.abs() {
            best = (mid, fm);
        }
        if opposite(flo, fm) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(Root { x: best.0, fx: best.1, lo, hi, evaluations })
}

/// Brent's method. Stops when the bracket is below `xtol` or `|f| <= ftol`.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    flo: f64,
    fhi: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<Root> {
    if !opposite(flo, fhi) {
        return Err(Error::NoSolution {
            message: format!("f({lo}) = {flo} and f({hi}) = {fhi} share a sign"),
            grid: vec![(lo, flo), (hi, fhi)],
        });
    }
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, flo, fhi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    let mut evaluations = 0;
    for _ in 0..max_iter {
        if !opposite(fb, fc) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            break;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        evaluations += 1;
    }
    let (lo, hi) = if b < c { (b, c) } else { (c, b) };
    Ok(Root { x: b, fx: fb, lo, hi, evaluations })
}
