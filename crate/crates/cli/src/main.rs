mod config;
mod output;
mod scan;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::Settings;
use output::Manifest;
use scan::{failed_suites, Mode, ScanConfig};

const UNITS: &str = "\
Units: ħ = 1 and fermion mass ½, so a fermion of momentum k has kinetic energy k². \
Energies (binding, mu, tau, outputs) share one arbitrary unit; --normalize reports \
output energies in units of |E_B|. Momenta are in the inverse of the box length unit.

Grids: every numeric option takes a comma list, `lin:start:stop:count` or \
`log:start:stop:count`, and may be repeated. Rows are emitted in ascending \
lexicographic order over mass-ratio, binding, mu (or mu-tilde), box and then \
the mode's own axes.

Exit codes: 0 success, 1 some grid point or suite failed, 2 usage or config error.";

#[derive(Parser, Debug)]
#[command(name = "polaron", version, about = "Parameter sweeps for a heavy impurity in a 2D Fermi gas", long_about = None, after_long_help = UNITS)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Lowest solution of the polaron equation.
    #[command(after_long_help = UNITS)]
    Polaron(ScanArgs),
    /// Perturbed polaron equation over a grid of subtractions r.
    #[command(after_long_help = UNITS)]
    Perturbed(ScanArgs),
    /// Table of the pair function G(q, τ).
    #[command(after_long_help = UNITS)]
    Gtable(ScanArgs),
    /// Stability functional α(M, ε) and margin.
    #[command(after_long_help = UNITS)]
    Stability(ScanArgs),
    /// Critical mass ratio for each ε.
    #[command(after_long_help = UNITS)]
    CriticalMass(ScanArgs),
    /// Certificate suites.
    #[command(after_long_help = UNITS)]
    Certify(ScanArgs),
}

#[derive(Args, Debug, Default)]
struct ScanArgs {
    /// Flat key=value file; flags of the same name override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Impurity to fermion mass ratio M.
    #[arg(long = "mass-ratio", value_name = "GRID")]
    mass_ratio: Vec<String>,
    /// Two-body binding energy E_B < 0.
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    binding: Vec<String>,
    /// Fermi energy μ.
    #[arg(long, value_name = "GRID")]
    mu: Vec<String>,
    /// μ/|E_B|, an alternative to --mu.
    #[arg(long = "mu-tilde", value_name = "GRID")]
    mu_tilde: Vec<String>,
    /// Box side L.
    #[arg(long = "box", value_name = "GRID")]
    box_side: Vec<String>,
    /// Subtraction r ≥ 0 of the perturbed equation.
    #[arg(long, value_name = "GRID")]
    r: Vec<String>,
    /// Stability parameter ε.
    #[arg(long, value_name = "GRID")]
    epsilon: Vec<String>,
    /// First momentum component of G.
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    qx: Vec<String>,
    /// Second momentum component of G.
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    qy: Vec<String>,
    /// Energy argument τ of G.
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    tau: Vec<String>,
    /// Residual tolerance of the solvers, or the mass tolerance of critical-mass.
    #[arg(long, value_name = "X")]
    tol: Option<String>,
    /// Absolute quadrature tolerance of the stability integral.
    #[arg(long = "quad-tol", value_name = "X")]
    quad_tol: Option<String>,
    /// `lattice` or `continuum` G in the Fermi-sea sums.
    #[arg(long, value_name = "KIND")]
    kernel: Option<String>,
    /// `columns` or `shells:<factor>` closure of the G sum.
    #[arg(long, value_name = "POLICY")]
    policy: Option<String>,
    /// Report output energies in units of |E_B|.
    #[arg(long)]
    normalize: bool,
    /// Certificate suites: sum-integral, shell-count, log-band, polaron-band, gap-band.
    #[arg(long, value_name = "LIST")]
    suite: Vec<String>,
    /// Seed of the randomized suites.
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    /// Cases per randomized suite.
    #[arg(long, value_name = "N")]
    cases: Option<String>,
    /// `csv` or `json`.
    #[arg(long, value_name = "FORMAT")]
    format: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    threads: Option<String>,
}

impl ScanArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let lists = [
            ("mass-ratio", &self.mass_ratio),
            ("binding", &self.binding),
            ("mu", &self.mu),
            ("mu-tilde", &self.mu_tilde),
            ("box", &self.box_side),
            ("r", &self.r),
            ("epsilon", &self.epsilon),
            ("qx", &self.qx),
            ("qy", &self.qy),
            ("tau", &self.tau),
            ("suite", &self.suite),
        ];
        for (key, values) in lists {
            if !values.is_empty() {
                flags.set(key, values.clone())?;
            }
        }
        let singles = [
            ("tol", &self.tol),
            ("quad-tol", &self.quad_tol),
            ("kernel", &self.kernel),
            ("policy", &self.policy),
            ("seed", &self.seed),
            ("cases", &self.cases),
            ("format", &self.format),
            ("out", &self.out),
            ("threads", &self.threads),
        ];
        for (key, value) in singles {
            if let Some(v) = value {
                flags.set(key, vec![v.clone()])?;
            }
        }
        if self.normalize {
            flags.set("normalize", vec!["true".into()])?;
        }
        // --mu and --mu-tilde replace each other
        if flags.raw("mu").is_some() || flags.raw("mu-tilde").is_some() {
            s.remove("mu");
            s.remove("mu-tilde");
        }
        s.overlay(flags);
        Ok(s)
    }
}

fn config_hash(mode: Mode, s: &Settings) -> String {
    let mut h = Sha256::new();
    h.update(mode.name().as_bytes());
    h.update(b"\n");
    h.update(s.canonical().as_bytes());
    hex::encode(h.finalize())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.verb {
        Verb::Polaron(a) => (Mode::Polaron, a),
        Verb::Perturbed(a) => (Mode::Perturbed, a),
        Verb::Gtable(a) => (Mode::Gtable, a),
        Verb::Stability(a) => (Mode::Stability, a),
        Verb::CriticalMass(a) => (Mode::CriticalMass, a),
        Verb::Certify(a) => (Mode::Certify, a),
    };
    match run(mode, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Errors returned here are usage or config errors.
fn run(mode: Mode, args: &ScanArgs) -> Result<ExitCode> {
    let settings = args.settings()?;
    let config = ScanConfig::from_settings(mode, &settings)?;
    let format = settings.format()?;
    let threads = match settings.integer("threads")? {
        Some(0) => anyhow::bail!("`threads` must be positive"),
        Some(n) => n as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("building thread pool")?;
    let mut sink: Box<dyn Write> = match settings.text("out")? {
        Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {path}"))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };

    let table = pool.install(|| config.run());
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        mode: mode.name().into(),
        config_hash: config_hash(mode, &settings),
        threads,
        tolerances: config.tolerances(),
    };
    if let Err(e) = output::write(&mut sink, format, &manifest, &table).and_then(|_| Ok(sink.flush()?)) {
        eprintln!("error: writing output: {e:#}");
        return Ok(ExitCode::from(1));
    }
    let failed = table.failures() + if mode == Mode::Certify { failed_suites(&table) } else { 0 };
    if failed > 0 {
        eprintln!("{failed} of {} rows failed", table.rows.len());
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
