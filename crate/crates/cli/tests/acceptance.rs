//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use polaron_core::certify::{
    band_kernel, band_params, log_band_grid, log_band_maxima, shell_count_suite, sum_integral_suite,
    GAP_BAND_MU_TILDES, POLARON_BAND_MU_TILDES,
};
use polaron_core::gfunc::{f_kernel, g_continuum, poisson_residual};
use polaron_core::polaron::{
    asymptotic_polaron, solve_perturbed, solve_perturbed_from, solve_polaron, trial_state_identity,
};
use polaron_core::quad::{integrate, integrate_to_inf, QuadOptions};
use polaron_core::stability::critical_mass;
use polaron_core::{Kernel, LatticeSpec, PhysParams, PolaronSolution, SolverOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// 1 and 2 share the solves
fn band_solves() -> Vec<(f64, PhysParams, Kernel, polaron_core::Result<PolaronSolution>)> {
    POLARON_BAND_MU_TILDES
        .iter()
        .map(|&mt| {
            let p = band_params(mt).unwrap();
            let kernel = band_kernel(mt);
            let sol = solve_polaron(&p, &SolverOptions::with_kernel(kernel));
            (mt, p, kernel, sol)
        })
        .collect()
}

fn criterion_1(solves: &[(f64, PhysParams, Kernel, polaron_core::Result<PolaronSolution>)], elapsed: f64) -> Outcome {
    let mut q = Vec::new();
    for (mt, p, _, sol) in solves {
        let Ok(sol) = sol else {
            return outcome(false, format!("solve failed at mu_tilde={mt:e}: {:?}", sol.as_ref().err()));
        };
        let lm = mt.ln();
        let leading = -(1.0 + 1.0 / p.mass_ratio) * p.mu / lm;
        assert_eq!(leading, asymptotic_polaron(p).unwrap().leading);
        q.push((sol.e_p - leading).abs() * lm * lm / p.mu);
    }
    let hi = q.iter().copied().fold(f64::MIN, f64::max);
    let lo = q.iter().copied().fold(f64::MAX, f64::min);
    let spread = hi / lo;
    outcome(
        spread < 3.0 && elapsed < 120.0,
        format!("band values {q:.4?}, spread {spread:.3} (< 3), {elapsed:.1} s (< 120 s)"),
    )
}

fn criterion_2(solves: &[(f64, PhysParams, Kernel, polaron_core::Result<PolaronSolution>)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (mt, p, kernel, sol) in solves {
        let Ok(sol) = sol else {
            return outcome(false, format!("no converged solve at mu_tilde={mt:e}"));
        };
        let t = trial_state_identity(p, sol.e_p, *kernel).unwrap();
        worst = worst.max(t.value.abs() / t.scale);
    }
    outcome(worst <= 1e-8, format!("max |identity|/sum|1/G| = {worst:.3e} (<= 1e-8)"))
}

fn criterion_3() -> Outcome {
    let a = critical_mass(0.0, 1e-9, 1e-10).unwrap();
    let b = critical_mass(0.0, 1e-9, 1e-11).unwrap();
    let shift = (a.m_star - b.m_star).abs();
    outcome(
        (1.220..=1.230).contains(&a.m_star) && shift < 1e-4,
        format!("M* = {:.10}, shift under 10x quad refinement {shift:.2e} (< 1e-4)", a.m_star),
    )
}

fn criterion_4() -> Outcome {
    let a = sum_integral_suite(0x5eed, 100);
    let b = shell_count_suite(0x5eed, 100);
    outcome(
        a.pass && b.pass && a.cases == 100 && b.cases == 100,
        format!(
            "sum-integral {}/100 hold (worst ratio {:.3}), shell-count {}/100 hold (worst ratio {:.3})",
            a.cases - a.failures,
            a.constant,
            b.cases - b.failures,
            b.constant
        ),
    )
}

/// `∫ d²k/(2π)² [1/(m k² + |E_B|) − χ(k² > μ)/((q − k)²/M + k² + τ)]` by nested quadrature.
fn continuum_by_quadrature(p: &PhysParams, q2: f64, tau: f64) -> f64 {
    let m = p.reduced_mass();
    let a = p.abs_binding();
    let mr = p.mass_ratio;
    let q = q2.sqrt();
    let inner = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 2000 };
    let ring = |s: f64| {
        let free = 2.0 * PI / (m * s + a);
        let sub = integrate(|th: f64| 1.0 / (m * s - 2.0 * q * s.sqrt() * th.cos() / mr + q2 / mr + tau), 0.0, PI, inner)
            .unwrap()
            .value;
        free - 2.0 * sub
    };
    let outer = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 4000 };
    let inside = integrate(|s| 2.0 * PI / (m * s + a), 0.0, p.mu, outer).unwrap().value;
    let outside = integrate_to_inf(ring, p.mu, outer).unwrap().value;
    (inside + outside) / (8.0 * PI * PI)
}

fn criterion_5() -> Outcome {
    // fixed pseudo-random sample from a 64-bit LCG
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut unit = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst: f64 = 0.0;
    let mut uncertified = 0;
    for _ in 0..20 {
        let mass = 1.05 + 4.0 * unit();
        let eb = -(0.01 + 2.0 * unit());
        let mu = 0.1 + 10.0 * unit();
        let q2 = 4.0 * mu * unit();
        let tau = mu * (-0.9 + 5.9 * unit());
        let p = PhysParams::new(mass, eb, mu, LatticeSpec::new(10.0).unwrap()).unwrap();
        let c = g_continuum(&p, q2, tau).unwrap();
        if !c.certified {
            uncertified += 1;
        }
        worst = worst.max((c.value - continuum_by_quadrature(&p, q2, tau)).abs());
    }
    let mut f_max_excess = f64::MIN;
    let mut f_points = 0;
    for mass in [1.05, 1.5, 2.0, 5.0] {
        let p = PhysParams::new(mass, -1.0, 1.0, LatticeSpec::new(10.0).unwrap()).unwrap();
        for i in 0..50 {
            let s = 50.0 * i as f64 / 49.0;
            for j in 0..50 {
                let tau = -0.99 + 20.0 * j as f64 / 49.0;
                let f = f_kernel(&p, s, tau).unwrap();
                f_max_excess = f_max_excess.max(f - (1.0 + 1.0 / mass));
                f_points += 1;
            }
        }
    }
    outcome(
        worst <= 1e-7 && uncertified == 0 && f_max_excess <= 0.0 && f_points == 10_000,
        format!(
            "max |closed form - quadrature| = {worst:.2e} (<= 1e-7) at 20 points; \
             max F - (1+1/M) = {f_max_excess:.3e} (<= 0) on {f_points} points"
        ),
    )
}

fn criterion_6() -> Outcome {
    let points = match log_band_grid() {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("grid failed: {e}")),
    };
    let maxima = log_band_maxima(&points);
    let finite = points.iter().all(|p| p.value.is_finite());
    let (lo, hi) = (maxima[0].1, maxima[1].1);
    outcome(
        finite && hi <= lo,
        format!("max scaled discrepancy {lo:.5} at mu_tilde=1e3, {hi:.5} at 1e5 (must not grow)"),
    )
}

fn criterion_7() -> Outcome {
    let p = PhysParams::new(2.0, -1.0, 1.0, LatticeSpec::new(10.0).unwrap()).unwrap();
    let rows = poisson_residual(&p, [0.0, 0.0], 1.0, &[10.0, 20.0, 40.0]).unwrap();
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled.abs()).collect();
    let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
    let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
    outcome(hi / lo < 10.0, format!("|residual|(L^2|E_B|)^1.5 = {scaled:.3?}, ratio {:.2} (< 10)", hi / lo))
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for &mt in &GAP_BAND_MU_TILDES {
        let p = band_params(mt).unwrap();
        let opts = SolverOptions::with_kernel(band_kernel(mt));
        let pol = solve_polaron(&p, &opts).unwrap();
        for r in [0.0, 37.0] {
            match solve_perturbed_from(&p, r, &pol, &opts) {
                Ok(s) => {
                    let v = s.gap * mt.ln() / ((1.0 + r) * s.e_p.abs());
                    let ordered = s.lambda <= s.fermi_energy + s.e_p;
                    pass &= ordered && v.is_finite() && s.gap >= 0.0;
                    lines.push(format!("r={r} mu_tilde={mt:e}: {v:.4}{}", if ordered { "" } else { " (order violated)" }));
                }
                Err(e) => {
                    pass = false;
                    lines.push(format!("r={r} mu_tilde={mt:e}: {e}"));
                }
            }
        }
    }
    outcome(pass, lines.join("; "))
}

/// Lattice constant is 1 at `L = 2π`; `G(0, τ)` from `r₂` shell sums with the
/// area-law tail and its boundary term.
struct UnitLatticeOracle {
    r2: Vec<u32>,
    counted: f64,
}

impl UnitLatticeOracle {
    const CUTOFF: usize = 1 << 21;

    fn new() -> Self {
        let n = Self::CUTOFF;
        let mut r2 = vec![0u32; n + 1];
        let side = (n as f64).sqrt() as i64 + 1;
        for i in -side..=side {
            for j in -side..=side {
                let k = (i * i + j * j) as usize;
                if k <= n {
                    r2[k] += 1;
                }
            }
        }
        let counted = r2.iter().map(|&r| r as f64).sum();
        Self { r2, counted }
    }

    /// `μ < 1`, so only the origin is inside the Fermi sea.
    fn g0(&self, p: &PhysParams, tau: f64) -> f64 {
        let m = p.reduced_mass();
        let a = p.abs_binding();
        let f = |s: f64| 1.0 / (m * s + a) - 1.0 / (m * s + tau);
        let mut sum = 1.0 / a;
        for (n, &r) in self.r2.iter().enumerate().skip(1) {
            if r > 0 {
                sum += r as f64 * f(n as f64);
            }
        }
        let big_n = Self::CUTOFF as f64;
        let tail = ((m * big_n + tau) / (m * big_n + a)).ln() / m * PI + (PI * big_n - self.counted) * f(big_n);
        (sum + tail) / (4.0 * PI * PI)
    }
}

fn dense_scan_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Option<f64> {
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=points {
        let b = lo + (hi - lo) * i as f64 / points as f64;
        let fb = f(b);
        if fa < 0.0 && fb >= 0.0 {
            let (mut x0, mut x1) = (a, b);
            for _ in 0..100 {
                let mid = 0.5 * (x0 + x1);
                if f(mid) < 0.0 {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            return Some(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    None
}

fn criterion_9() -> Outcome {
    let p = PhysParams::new(2.0, -1.0, 0.5, LatticeSpec::new(2.0 * PI).unwrap()).unwrap();
    let oracle = UnitLatticeOracle::new();
    let inv_area = 1.0 / (4.0 * PI * PI);
    let Some(e_oracle) = dense_scan_root(|e| e + inv_area / oracle.g0(&p, -e), -10.0, -1e-3, 2000) else {
        return outcome(false, "oracle found no polaron root");
    };
    let pol = solve_polaron(&p, &SolverOptions::default()).unwrap();
    let mut worst = (pol.e_p - e_oracle).abs();
    let mut parts = vec![format!("polaron {:.2e}", worst)];
    for r in [0.0, 0.005, 0.02] {
        let s = solve_perturbed(&p, r, &SolverOptions::default()).unwrap();
        let x_min = -e_oracle;
        let phi = |x: f64| x - inv_area / (oracle.g0(&p, x) - r);
        let x = if r == 0.0 {
            // the r = 0 equation coincides with the polaron equation
            Some(x_min)
        } else {
            dense_scan_root(phi, x_min, x_min + 10.0, 2000)
        };
        let Some(x) = x else {
            return outcome(false, format!("oracle found no perturbed root at r={r}"));
        };
        let d = (s.lambda - (0.0 - x)).abs();
        worst = worst.max(d);
        parts.push(format!("r={r} {d:.2e}"));
    }
    outcome(worst <= 1e-8, format!("max deviation {worst:.2e} (<= 1e-8): {}", parts.join(", ")))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    std::fs::write(
        &cfg,
        "mass-ratio = 1.5, 2\nbinding = -1\nmu-tilde = log:10:1000:3\nbox = 4\nbox = 8\nthreads = 4\n",
    )
    .unwrap();
    let run = |verb: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_polaron"))
            .args([verb, "--config", cfg.to_str().unwrap()])
            .output()
            .expect("binary runs");
        (o.status.code(), o.stdout)
    };
    let mut same = true;
    let mut detail = Vec::new();
    for verb in ["polaron", "perturbed", "gtable"] {
        let (c1, a) = run(verb);
        let (c2, b) = run(verb);
        let body = |v: &[u8]| String::from_utf8_lossy(v).lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        let ok = c1 == Some(0) && c2 == Some(0) && body(&a) == body(&b) && a == b;
        same &= ok;
        detail.push(format!("{verb}: {} bytes, {}", a.len(), if ok { "identical" } else { "DIFFERENT" }));
    }
    outcome(same, detail.join("; "))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, o: Outcome| {
        println!("criterion {n:>2} {:<4} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };

    let start = Instant::now();
    let solves = band_solves();
    let elapsed = start.elapsed().as_secs_f64();
    report(1, "polaron asymptotic band", criterion_1(&solves, elapsed));
    report(2, "trial-state identity", criterion_2(&solves));
    report(3, "critical mass", criterion_3());
    report(4, "sum and count certificates", criterion_4());
    report(5, "continuum closed form", criterion_5());
    report(6, "logarithmic band of G", criterion_6());
    report(7, "finite-box residual decay", criterion_7());
    report(8, "perturbed gap band", criterion_8());
    report(9, "single-mode oracles", criterion_9());
    report(10, "determinism", criterion_10());

    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all criteria passed");
        ExitCode::SUCCESS
    }
}
