//! Randomized and grid certificate suites.
//!
//! Each suite runs a family of checks and condenses them into a
//! [`SuiteReport`] with a pass flag and a fitted constant (the largest
//! observed value of the suite's scaled quantity).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfunc::{log_band_discrepancy, PhysParams};
use crate::lattice::{shell_count_bound, sum_integral_certificate, LatticeSpec};
use crate::polaron::{asymptotic_polaron, solve_perturbed_from, solve_polaron, Kernel, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Lattice sums of monotone functions against their integrals.
    SumIntegral,
    /// Mode counts in spectral bands against the area law.
    ShellCount,
    /// `G` against its logarithmic leading form.
    LogBand,
    /// Polaron energy against its leading asymptotics.
    PolaronBand,
    /// Gap of the perturbed equation.
    GapBand,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::SumIntegral, Suite::ShellCount, Suite::LogBand, Suite::PolaronBand, Suite::GapBand];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SumIntegral => "sum-integral",
            Suite::ShellCount => "shell-count",
            Suite::LogBand => "log-band",
            Suite::PolaronBand => "polaron-band",
            Suite::GapBand => "gap-band",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub seed: u64,
    /// Random cases for the randomized suites.
    pub cases: usize,
    /// Subtractions `r` for the gap suite.
    pub gap_r: Vec<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { seed: 0x5eed, cases: 100, gap_r: vec![0.0, 37.0] }
    }
}

/// One checked case. `value` is the suite's scaled quantity; `NaN` when the
/// case errored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub label: String,
    pub value: f64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CaseRecord {
    fn ok(label: String, value: f64, ok: bool) -> Self {
        Self { label, value, ok, note: None }
    }

    fn failed(label: String, err: &Error) -> Self {
        Self { label, value: f64::NAN, ok: false, note: Some(err.to_string()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub cases: usize,
    pub failures: usize,
    /// Largest scaled value over the cases that ran.
    pub constant: f64,
    pub records: Vec<CaseRecord>,
}

impl SuiteReport {
    fn from_records(suite: Suite, records: Vec<CaseRecord>) -> Self {
        let failures = records.iter().filter(|r| !r.ok).count();
        let constant = records.iter().map(|r| r.value).filter(|v| v.is_finite()).fold(f64::NAN, f64::max);
        Self { suite, pass: failures == 0 && !records.is_empty(), cases: records.len(), failures, constant, records }
    }
}

pub fn run_suite(suite: Suite, opts: &CertifyOptions) -> SuiteReport {
    match suite {
        Suite::SumIntegral => sum_integral_suite(opts.seed, opts.cases),
        Suite::ShellCount => shell_count_suite(opts.seed, opts.cases),
        Suite::LogBand => log_band_suite(),
        Suite::PolaronBand => polaron_band_suite(),
        Suite::GapBand => gap_band_suite(&opts.gap_r),
    }
}

/// A nonnegative nonincreasing test function of `s = k²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotoneFamily {
    /// `a / (s + c)^p`
    Rational { a: f64, c: f64, p: f64 },
    /// `a · exp(−s / w)`
    Exponential { a: f64, w: f64 },
}

impl MonotoneFamily {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            MonotoneFamily::Rational { a, c, p } => a * (s + c).powf(-p),
            MonotoneFamily::Exponential { a, w } => a * (-s / w).exp(),
        }
    }

    pub fn random<R: Rng>(rng: &mut R, rational: bool) -> Self {
        let a = rng.gen_range(0.5..2.0);
        if rational {
            MonotoneFamily::Rational { a, c: rng.gen_range(0.05..5.0), p: rng.gen_range(1.5..4.0) }
        } else {
            MonotoneFamily::Exponential { a, w: rng.gen_range(0.05..20.0) }
        }
    }
}

/// Sum-versus-integral certificates on alternating rational and exponential
/// functions. The scaled value is `(|sum − integral| + tail) / bound`.
pub fn sum_integral_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..cases)
        .map(|i| {
            let f = MonotoneFamily::random(&mut rng, i % 2 == 0);
            let box_side = rng.gen_range(1.0..20.0);
            let m = if rng.gen_bool(1.0 / 3.0) { 0.0 } else { rng.gen_range(0.0..20.0) };
            let label = format!("{f:?} L={box_side:.4} m={m:.4}");
            let run = || {
                let spec = LatticeSpec::new(box_side)?;
                sum_integral_certificate(|s| f.eval(s), m, &spec)
            };
            match run() {
                Ok(c) => CaseRecord::ok(label, ((c.lattice_sum - c.integral).abs() + c.tail_uncertainty) / c.bound, c.holds),
                Err(e) => CaseRecord::failed(label, &e),
            }
        })
        .collect();
    SuiteReport::from_records(Suite::SumIntegral, records)
}

const SHELL_COUNT_MODES: f64 = 1e5;

/// Band counts on random `(a, b, L, μ)` holding at most `10⁵` modes.
/// The scaled value is `|density − reference| / bound`.
pub fn shell_count_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let records = (0..cases)
        .map(|_| {
            let box_side = rng.gen_range(1.0..50.0);
            let a = rng.gen_range(0.0..2.0);
            let b = a + rng.gen_range(0.05..3.0);
            // mode count of the band is about L²(b − a)μ/(4π), plus the disk edge
            let mu_cap = SHELL_COUNT_MODES * 4.0 * PI / (box_side * box_side * b) * 0.9;
            let mu = (rng.gen_range(0.1f64.ln()..1e3f64.ln())).exp().min(mu_cap);
            let label = format!("L={box_side:.4} a={a:.4} b={b:.4} mu={mu:.6}");
            let run = || {
                let spec = LatticeSpec::new(box_side)?;
                let check = shell_count_bound(&spec, a, b, mu)?;
                if check.mode_count as f64 > SHELL_COUNT_MODES {
                    return Err(Error::ResourceLimit { count: check.mode_count, cap: SHELL_COUNT_MODES as u64 });
                }
                Ok(check)
            };
            match run() {
                Ok(c) => CaseRecord::ok(label, (c.count_density - c.reference).abs() / c.bound, c.holds),
                Err(e) => CaseRecord::failed(label, &e),
            }
        })
        .collect();
    SuiteReport::from_records(Suite::ShellCount, records)
}

pub const LOG_BAND_MU_TILDES: [f64; 2] = [1e3, 1e5];
/// Values of `L²|E_B|`.
pub const LOG_BAND_BOXES: [f64; 2] = [1.0, 100.0];
/// `|q|/√μ` before snapping to the lattice.
pub const LOG_BAND_Q: [f64; 3] = [0.0, 0.5, 1.0];
/// `τ/μ`.
pub const LOG_BAND_TAU: [f64; 8] = [-0.5, -0.25, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0];

/// One point of the log-band grid at `M = 2`, `E_B = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBandPoint {
    pub mu_tilde: f64,
    pub box_area: f64,
    pub q: [f64; 2],
    pub tau: f64,
    pub value: f64,
}

/// Scaled discrepancies over the default grid, in grid order.
pub fn log_band_grid() -> Result<Vec<LogBandPoint>> {
    let mut out = Vec::new();
    for mu_tilde in LOG_BAND_MU_TILDES {
        for box_area in LOG_BAND_BOXES {
            let p = PhysParams::from_mu_tilde(2.0, -1.0, mu_tilde, box_area.sqrt())?;
            let kappa = p.spec.spacing();
            for c in LOG_BAND_Q {
                let q = [kappa * (c * p.mu.sqrt() / kappa).round(), 0.0];
                for t in LOG_BAND_TAU {
                    let tau = t * p.mu;
                    let value = log_band_discrepancy(&p, q, tau)?;
                    out.push(LogBandPoint { mu_tilde, box_area, q, tau, value });
                }
            }
        }
    }
    Ok(out)
}

/// Largest scaled discrepancy at each `μ̃` of the grid.
pub fn log_band_maxima(points: &[LogBandPoint]) -> Vec<(f64, f64)> {
    LOG_BAND_MU_TILDES
        .iter()
        .map(|&mt| {
            let max = points.iter().filter(|p| p.mu_tilde == mt).map(|p| p.value).fold(f64::NAN, f64::max);
            (mt, max)
        })
        .collect()
}

/// Every grid point must give a finite scaled discrepancy; the fitted
/// constant is their maximum. The per-`μ̃` maxima are appended as records.
pub fn log_band_suite() -> SuiteReport {
    let points = match log_band_grid() {
        Ok(p) => p,
        Err(e) => return SuiteReport::from_records(Suite::LogBand, vec![CaseRecord::failed("grid".into(), &e)]),
    };
    let mut records: Vec<CaseRecord> = points
        .iter()
        .map(|pt| {
            CaseRecord::ok(
                format!("mu_tilde={:e} L2EB={} q={} tau={}", pt.mu_tilde, pt.box_area, pt.q[0], pt.tau),
                pt.value,
                pt.value.is_finite(),
            )
        })
        .collect();
    for (mt, max) in log_band_maxima(&points) {
        records.push(CaseRecord::ok(format!("max mu_tilde={mt:e}"), max, max.is_finite()));
    }
    SuiteReport::from_records(Suite::LogBand, records)
}

pub const POLARON_BAND_MU_TILDES: [f64; 4] = [1e3, 1e4, 1e5, 1e6];

/// Kernel used by the band suites: the lattice sum while it is affordable,
/// the continuum form beyond.
pub fn band_kernel(mu_tilde: f64) -> Kernel {
    if mu_tilde <= 1e4 {
        Kernel::Lattice
    } else {
        Kernel::Continuum
    }
}

/// `M = 2`, `E_B = −1`, `L = 10`.
pub fn band_params(mu_tilde: f64) -> Result<PhysParams> {
    PhysParams::from_mu_tilde(2.0, -1.0, mu_tilde, 10.0)
}

/// `|e_P − leading|·(log μ̃)²/μ` across `μ̃`; passes when the values stay
/// within a factor 3 of each other.
pub fn polaron_band_suite() -> SuiteReport {
    let mut records: Vec<CaseRecord> = POLARON_BAND_MU_TILDES
        .iter()
        .map(|&mt| {
            let label = format!("mu_tilde={mt:e}");
            let run = || -> Result<f64> {
                let p = band_params(mt)?;
                let sol = solve_polaron(&p, &SolverOptions::with_kernel(band_kernel(mt)))?;
                let asym = asymptotic_polaron(&p)?;
                Ok((sol.e_p - asym.leading).abs() / asym.band_scale)
            };
            match run() {
                Ok(v) => CaseRecord::ok(label, v, v.is_finite()),
                Err(e) => CaseRecord::failed(label, &e),
            }
        })
        .collect();
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi / lo;
    records.push(CaseRecord::ok("spread".into(), spread, spread < 3.0));
    let mut report = SuiteReport::from_records(Suite::PolaronBand, records);
    report.constant = hi;
    report
}

pub const GAP_BAND_MU_TILDES: [f64; 3] = [1e4, 1e5, 1e6];

/// `gap·log μ̃/((1 + r)|e_P|)` for each `r` and `μ̃`; every solve must
/// succeed with `λ ≤ E₀ + e_P`.
pub fn gap_band_suite(rs: &[f64]) -> SuiteReport {
    let mut records = Vec::new();
    for &mt in &GAP_BAND_MU_TILDES {
        let opts = SolverOptions::with_kernel(band_kernel(mt));
        let pol = band_params(mt).and_then(|p| solve_polaron(&p, &opts).map(|s| (p, s)));
        for &r in rs {
            let label = format!("mu_tilde={mt:e} r={r}");
            let run = || -> Result<(f64, bool)> {
                let (p, sol) = pol.as_ref().map_err(Clone::clone)?;
                let pert = solve_perturbed_from(p, r, sol, &opts)?;
                let ordered = pert.lambda <= pert.fermi_energy + pert.e_p;
                Ok((pert.gap * mt.ln() / ((1.0 + r) * pert.e_p.abs()), ordered))
            };
            records.push(match run() {
                Ok((v, ordered)) => CaseRecord::ok(label, v, ordered && v.is_finite()),
                Err(e) => CaseRecord::failed(label, &e),
            });
        }
    }
    SuiteReport::from_records(Suite::GapBand, records)
}
