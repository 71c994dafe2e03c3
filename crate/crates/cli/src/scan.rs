//! Grid execution for each mode.

use anyhow::{bail, Result};
use rayon::prelude::*;

use polaron_core::certify::{run_suite, CertifyOptions, Suite};
use polaron_core::gfunc::{g_continuum, g_lattice_with, log_band_weight, log_reference};
use polaron_core::lattice::fermi_sea_energy;
use polaron_core::polaron::{asymptotic_polaron, solve_perturbed_from, solve_polaron};
use polaron_core::stability::{critical_mass, epsilon_max, k_error, stability_margin, DEFAULT_QUAD_TOL};
use polaron_core::{GOptions, Kernel, LatticeSpec, PhysParams, SolverOptions, TailPolicy};

use crate::config::Settings;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Polaron,
    Perturbed,
    Gtable,
    Stability,
    CriticalMass,
    Certify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Polaron => "polaron",
            Mode::Perturbed => "perturbed",
            Mode::Gtable => "gtable",
            Mode::Stability => "stability",
            Mode::CriticalMass => "critical-mass",
            Mode::Certify => "certify",
        }
    }
}

pub const DEFAULT_CRITICAL_TOL: f64 = 1e-8;

/// A validated scan: every grid expanded and every option parsed.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub mode: Mode,
    points: Vec<Point>,
    r: Vec<f64>,
    epsilon: Vec<f64>,
    qx: Vec<f64>,
    qy: Vec<f64>,
    tau: Vec<f64>,
    tol: Option<f64>,
    quad_tol: f64,
    kernel: Kernel,
    policy: TailPolicy,
    normalize: bool,
    suites: Vec<Suite>,
    certify: CertifyOptions,
}

/// One physical parameter set of the scan grid.
#[derive(Debug, Clone, Copy)]
struct Point {
    mass_ratio: f64,
    binding: f64,
    mu: f64,
    /// Set when the grid was given in `μ̃`.
    mu_tilde: Option<f64>,
    box_side: f64,
}

impl Point {
    fn params(&self) -> polaron_core::Result<PhysParams> {
        PhysParams::new(self.mass_ratio, self.binding, self.mu, LatticeSpec::new(self.box_side)?)
    }

    fn mu_tilde(&self) -> f64 {
        self.mu_tilde.unwrap_or(self.mu / self.binding.abs())
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.mass_ratio.into(),
            self.binding.into(),
            self.mu.into(),
            self.mu_tilde().into(),
            self.box_side.into(),
            (self.box_side * self.box_side * self.binding.abs() >= 1.0).into(),
        ]
    }
}

const POINT_COLUMNS: [&str; 6] = ["mass_ratio", "binding", "mu", "mu_tilde", "box", "wellcoupled"];

impl ScanConfig {
    pub fn from_settings(mode: Mode, s: &Settings) -> Result<Self> {
        let mass = s.grid("mass-ratio", &[2.0])?;
        let binding = s.grid("binding", &[-1.0])?;
        let boxes = s.grid("box", &[10.0])?;
        if s.raw("mu").is_some() && s.raw("mu-tilde").is_some() {
            bail!("give either `mu` or `mu-tilde`, not both");
        }
        let mu_tilde = s.raw("mu-tilde").is_some();
        let mus = if mu_tilde { s.grid("mu-tilde", &[])? } else { s.grid("mu", &[1.0])? };
        let mut points = Vec::new();
        for &m in &mass {
            for &eb in &binding {
                for &mu in &mus {
                    for &l in &boxes {
                        let (mu, mt) = if mu_tilde { (mu * eb.abs(), Some(mu)) } else { (mu, None) };
                        points.push(Point { mass_ratio: m, binding: eb, mu, mu_tilde: mt, box_side: l });
                    }
                }
            }
        }
        let mut certify = CertifyOptions::default();
        if let Some(seed) = s.integer("seed")? {
            certify.seed = seed;
        }
        if let Some(cases) = s.integer("cases")? {
            if cases == 0 {
                bail!("`cases` must be positive");
            }
            certify.cases = cases as usize;
        }
        let r = s.grid("r", &[0.0])?;
        if r.iter().any(|&v| v < 0.0) {
            bail!("`r` must be nonnegative");
        }
        if s.raw("r").is_some() {
            certify.gap_r = r.clone();
        }
        Ok(Self {
            mode,
            points,
            r,
            epsilon: s.grid("epsilon", &[0.0])?,
            qx: s.grid("qx", &[0.0])?,
            qy: s.grid("qy", &[0.0])?,
            tau: s.grid("tau", &[0.0])?,
            tol: s.positive("tol")?,
            quad_tol: s.positive("quad-tol")?.unwrap_or(DEFAULT_QUAD_TOL),
            kernel: s.kernel()?,
            policy: s.policy()?,
            normalize: s.flag("normalize")?,
            suites: if mode == Mode::Certify { s.suites()? } else { Vec::new() },
            certify,
        })
    }

    /// Tolerances recorded in the manifest.
    pub fn tolerances(&self) -> Vec<(&'static str, f64)> {
        match self.mode {
            Mode::Polaron | Mode::Perturbed => self.tol.map(|t| vec![("tol", t)]).unwrap_or_default(),
            Mode::Stability => vec![("quad_tol", self.quad_tol)],
            Mode::CriticalMass => vec![("tol", self.tol.unwrap_or(DEFAULT_CRITICAL_TOL)), ("quad_tol", self.quad_tol)],
            Mode::Gtable | Mode::Certify => Vec::new(),
        }
    }

    pub fn run(&self) -> Table {
        match self.mode {
            Mode::Polaron => self.polaron(),
            Mode::Perturbed => self.perturbed(),
            Mode::Gtable => self.gtable(),
            Mode::Stability => self.stability(),
            Mode::CriticalMass => self.critical_mass(),
            Mode::Certify => self.certify(),
        }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, kernel: self.kernel, ..SolverOptions::default() }
    }

    fn kernel_name(&self) -> &'static str {
        match self.kernel {
            Kernel::Lattice => "lattice",
            Kernel::Continuum => "continuum",
        }
    }

    fn polaron(&self) -> Table {
        const OUT: [&str; 11] = [
            "e_p",
            "residual",
            "tol",
            "bracket_lo",
            "bracket_hi",
            "evaluations",
            "leading",
            "band_scale",
            "band_constant",
            "fermi_energy",
            "upper_bound",
        ];
        let mut table = Table::new(columns(&[&POINT_COLUMNS[..], &["kernel", "status"], &OUT, &["error"]]));
        table.rows = self
            .points
            .par_iter()
            .map(|pt| {
                let out = (|| -> polaron_core::Result<Vec<Cell>> {
                    let p = pt.params()?;
                    let sol = solve_polaron(&p, &self.solver())?;
                    let e0 = fermi_sea_energy(&p.spec, p.mu)?;
                    let unit = self.energy_unit(&p);
                    let asym = asymptotic_polaron(&p).ok();
                    Ok(vec![
                        (sol.e_p / unit).into(),
                        (sol.residual / unit).into(),
                        (sol.tol / unit).into(),
                        (sol.bracket.0 / unit).into(),
                        (sol.bracket.1 / unit).into(),
                        sol.evaluations.into(),
                        asym.map(|a| a.leading / unit).into(),
                        asym.map(|a| a.band_scale / unit).into(),
                        asym.map(|a| (sol.e_p - a.leading).abs() / a.band_scale).into(),
                        (e0 / unit).into(),
                        ((e0 + sol.e_p) / unit).into(),
                    ])
                })();
                finish(pt.cells(), vec![self.kernel_name().into()], out, OUT.len())
            })
            .collect();
        table
    }

    fn energy_unit(&self, p: &PhysParams) -> f64 {
        if self.normalize {
            p.abs_binding()
        } else {
            1.0
        }
    }

    fn perturbed(&self) -> Table {
        const OUT: [&str; 9] =
            ["lambda", "gap", "gap_scaled", "e_p", "fermi_energy", "residual", "tol", "evaluations", "lambda_ordered"];
        let mut table = Table::new(columns(&[&POINT_COLUMNS[..], &["kernel", "r", "status"], &OUT, &["error"]]));
        let rows: Vec<Vec<Vec<Cell>>> = self
            .points
            .par_iter()
            .map(|pt| {
                let opts = self.solver();
                let pol = pt.params().and_then(|p| solve_polaron(&p, &opts).map(|s| (p, s)));
                self.r
                    .iter()
                    .map(|&r| {
                        let out = (|| -> polaron_core::Result<Vec<Cell>> {
                            let (p, sol) = pol.as_ref().map_err(Clone::clone)?;
                            let s = solve_perturbed_from(p, r, sol, &opts)?;
                            let unit = self.energy_unit(p);
                            let lm = p.mu_tilde().ln();
                            let scaled = (lm > 0.0).then(|| s.gap * lm / ((1.0 + r) * s.e_p.abs()));
                            Ok(vec![
                                (s.lambda / unit).into(),
                                (s.gap / unit).into(),
                                scaled.into(),
                                (s.e_p / unit).into(),
                                (s.fermi_energy / unit).into(),
                                (s.residual / unit).into(),
                                (s.tol / unit).into(),
                                s.evaluations.into(),
                                (s.lambda <= s.fermi_energy + s.e_p).into(),
                            ])
                        })();
                        finish(pt.cells(), vec![self.kernel_name().into(), r.into()], out, OUT.len())
                    })
                    .collect()
            })
            .collect();
        table.rows = rows.into_iter().flatten().collect();
        table
    }

    fn gtable(&self) -> Table {
        const OUT: [&str; 8] = [
            "value",
            "tail_correction",
            "tail_bound",
            "cutoff_k2",
            "continuum",
            "continuum_certified",
            "log_reference",
            "band_discrepancy",
        ];
        let mut table = Table::new(columns(&[&POINT_COLUMNS[..], &["qx", "qy", "tau", "status"], &OUT, &["error"]]));
        let mut jobs = Vec::new();
        for pt in &self.points {
            for &qx in &self.qx {
                for &qy in &self.qy {
                    for &tau in &self.tau {
                        jobs.push((*pt, qx, qy, tau));
                    }
                }
            }
        }
        let opts = GOptions { policy: self.policy, ..GOptions::default() };
        table.rows = jobs
            .par_iter()
            .map(|&(pt, qx, qy, tau)| {
                let out = (|| -> polaron_core::Result<Vec<Cell>> {
                    let p = pt.params()?;
                    let q2 = qx * qx + qy * qy;
                    let g = g_lattice_with(&p, [qx, qy], tau, &opts)?;
                    let cont = g_continuum(&p, q2, tau)?;
                    let reference = log_reference(&p, q2, tau).ok().filter(|v| v.is_finite());
                    let band = match (reference, log_band_weight(&p, tau)) {
                        (Some(r), Ok(w)) => Some((g.value - r).abs() / w),
                        _ => None,
                    };
                    Ok(vec![
                        g.value.into(),
                        g.tail_correction.into(),
                        g.tail_bound.into(),
                        g.cutoff_k2.into(),
                        cont.value.into(),
                        cont.certified.into(),
                        reference.into(),
                        band.into(),
                    ])
                })();
                finish(pt.cells(), vec![qx.into(), qy.into(), tau.into()], out, OUT.len())
            })
            .collect();
        table
    }

    fn stability(&self) -> Table {
        const OUT: [&str; 5] = ["epsilon_max", "alpha", "margin", "condition_holds", "k_error"];
        let mut table = Table::new(columns(&[&["mass_ratio", "epsilon", "mu_tilde", "status"], &OUT, &["error"]]));
        let mut jobs = Vec::new();
        let mts: Vec<Option<f64>> = {
            let mut v: Vec<Option<f64>> = self.points.iter().map(|p| p.mu_tilde).collect();
            v.sort_by(|a, b| a.unwrap_or(0.0).total_cmp(&b.unwrap_or(0.0)));
            v.dedup();
            v
        };
        let mut masses: Vec<f64> = self.points.iter().map(|p| p.mass_ratio).collect();
        masses.dedup();
        for &m in &masses {
            for &eps in &self.epsilon {
                for &mt in &mts {
                    jobs.push((m, eps, mt));
                }
            }
        }
        table.rows = jobs
            .par_iter()
            .map(|&(m, eps, mt)| {
                let out = (|| -> polaron_core::Result<Vec<Cell>> {
                    let s = stability_margin(m, eps, self.quad_tol)?;
                    let k = match mt {
                        Some(mt) if eps > 0.0 => Some(k_error(eps, mt)?),
                        _ => None,
                    };
                    Ok(vec![
                        epsilon_max(m)?.into(),
                        s.alpha.into(),
                        s.margin.into(),
                        s.condition_holds.into(),
                        k.into(),
                    ])
                })();
                finish(vec![m.into(), eps.into(), mt.into()], Vec::new(), out, OUT.len())
            })
            .collect();
        table
    }

    fn critical_mass(&self) -> Table {
        const OUT: [&str; 5] = ["m_star", "bracket_lo", "bracket_hi", "margin_lo", "margin_hi"];
        let mut table = Table::new(columns(&[&["epsilon", "status"], &OUT, &["error"]]));
        let tol = self.tol.unwrap_or(DEFAULT_CRITICAL_TOL);
        table.rows = self
            .epsilon
            .par_iter()
            .map(|&eps| {
                let out = critical_mass(eps, tol, self.quad_tol).map(|c| {
                    vec![
                        c.m_star.into(),
                        c.bracket.0.into(),
                        c.bracket.1.into(),
                        c.margin_lo.into(),
                        c.margin_hi.into(),
                    ]
                });
                finish(vec![eps.into()], Vec::new(), out, OUT.len())
            })
            .collect();
        table
    }

    /// One summary row per suite (`case = all`) followed by its cases.
    fn certify(&self) -> Table {
        let mut table = Table::new(vec!["suite", "case", "pass", "value", "cases", "failures", "note"]);
        let reports: Vec<_> = self.suites.par_iter().map(|&s| run_suite(s, &self.certify)).collect();
        for rep in reports {
            table.push(vec![
                rep.suite.name().into(),
                "all".into(),
                rep.pass.into(),
                rep.constant.into(),
                rep.cases.into(),
                rep.failures.into(),
                Cell::Empty,
            ]);
            for rec in rep.records {
                table.push(vec![
                    rep.suite.name().into(),
                    rec.label.into(),
                    rec.ok.into(),
                    rec.value.into(),
                    Cell::Empty,
                    Cell::Empty,
                    rec.note.into(),
                ]);
            }
        }
        table
    }
}

/// Suites that did not pass, read back from a certify table.
pub fn failed_suites(table: &Table) -> usize {
    table.rows.iter().filter(|r| r[1] == Cell::Text("all".into()) && r[2] == Cell::Bool(false)).count()
}

fn columns(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

/// `inputs ++ extra ++ [status] ++ outputs ++ [error]`.
fn finish(mut row: Vec<Cell>, extra: Vec<Cell>, out: polaron_core::Result<Vec<Cell>>, width: usize) -> Vec<Cell> {
    row.extend(extra);
    match out {
        Ok(cells) => {
            row.push("ok".into());
            row.extend(cells);
            row.push(Cell::Empty);
        }
        Err(e) => {
            row.push("error".into());
            row.extend(std::iter::repeat_n(Cell::Empty, width));
            row.push(e.to_string().into());
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(mode: Mode, body: &str) -> Table {
        ScanConfig::from_settings(mode, &Settings::parse(body).unwrap()).unwrap().run()
    }

    #[test]
    fn single_mode_polaron_row() {
        let t = scan(Mode::Polaron, "box=6.283185307179586\nmu=0.5");
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.failures(), 0);
        let e_p = t.columns.iter().position(|c| *c == "e_p").unwrap();
        let Cell::Num(v) = t.rows[0][e_p] else { panic!() };
        assert!(v < 0.0);
    }

    #[test]
    fn failed_points_are_flagged_and_the_scan_continues() {
        let t = scan(Mode::Gtable, "mu=1\ntau=-2,0");
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.failures(), 1);
        assert_eq!(t.rows[0][t.columns.len() - 1], Cell::Text("domain error: tau = -2 must exceed -mu = -1".to_string()));
    }

    #[test]
    fn rows_follow_grid_order() {
        let t = scan(Mode::Stability, "mass-ratio=3,1.5\nepsilon=1e-3,0");
        let got: Vec<(Cell, Cell)> = t.rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
        let want = [(1.5, 0.0), (1.5, 1e-3), (3.0, 0.0), (3.0, 1e-3)];
        assert_eq!(got, want.map(|(a, b)| (Cell::Num(a), Cell::Num(b))).to_vec());
    }

    #[test]
    fn perturbed_rows_per_r() {
        let t = scan(Mode::Perturbed, "box=6.283185307179586\nmu=0.5\nr=0,0.01");
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.failures(), 0);
    }

    #[test]
    fn both_mu_forms_are_rejected() {
        let s = Settings::parse("mu=1\nmu-tilde=10").unwrap();
        assert!(ScanConfig::from_settings(Mode::Polaron, &s).is_err());
    }
}
