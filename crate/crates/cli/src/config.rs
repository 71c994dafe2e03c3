//! Flat `key = value` settings, grid expansion and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use polaron_core::certify::Suite;
use polaron_core::Kernel;
use polaron_core::TailPolicy;

/// Keys accepted in config files and as flags of the same name.
pub const KEYS: &[&str] = &[
    "mass-ratio",
    "binding",
    "mu",
    "mu-tilde",
    "box",
    "r",
    "epsilon",
    "qx",
    "qy",
    "tau",
    "tol",
    "quad-tol",
    "kernel",
    "policy",
    "normalize",
    "suite",
    "seed",
    "cases",
    "format",
    "out",
    "threads",
];

/// Resolved settings: every key maps to its list of raw values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, Vec<String>>,
}

impl Settings {
    /// Parses a config file body. Repeated keys append; `#` starts a comment.
    pub fn parse(body: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", n + 1))?;
            let key = key.trim();
            check_key(key).with_context(|| format!("line {}", n + 1))?;
            s.values.entry(key.to_string()).or_default().push(value.trim().to_string());
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&body).with_context(|| format!("in {}", path.display()))
    }

    /// Replaces the values of `key` wholesale.
    pub fn set(&mut self, key: &str, values: Vec<String>) -> Result<()> {
        check_key(key)?;
        self.values.insert(key.to_string(), values);
        Ok(())
    }

    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    pub fn overlay(&mut self, other: Settings) {
        self.values.extend(other.values);
    }

    pub fn raw(&self, key: &str) -> Option<&[String]> {
        self.values.get(key).map(Vec::as_slice)
    }

    fn single(&self, key: &str) -> Result<Option<&str>> {
        match self.raw(key) {
            None => Ok(None),
            Some([v]) => Ok(Some(v.as_str())),
            Some(vs) => bail!("`{key}` takes one value, got {}", vs.len()),
        }
    }

    /// Canonical text used for the config hash: sorted keys, one
    /// `key=value` line per value, `out` excluded.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, vs) in &self.values {
            if k == "out" {
                continue;
            }
            for v in vs {
                out.push_str(k);
                out.push('=');
                out.push_str(v);
                out.push('\n');
            }
        }
        out
    }

    /// Expands the grid for `key`, sorted ascending without duplicates.
    /// Falls back to `default` when the key is absent.
    pub fn grid(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let Some(raw) = self.raw(key) else {
            return Ok(default.to_vec());
        };
        let mut out = Vec::new();
        for item in raw.iter().flat_map(|v| v.split(',')) {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            out.extend(parse_range(item).with_context(|| format!("`{key}`"))?);
        }
        if out.is_empty() {
            bail!("grid `{key}` is empty");
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        Ok(out)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        self.single(key)?
            .map(|v| v.parse::<f64>().with_context(|| format!("`{key}`: bad number `{v}`")))
            .transpose()
    }

    pub fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.number(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => bail!("`{key}` must be positive, got {v}"),
            other => Ok(other),
        }
    }

    pub fn integer(&self, key: &str) -> Result<Option<u64>> {
        self.single(key)?
            .map(|v| v.parse::<u64>().with_context(|| format!("`{key}`: bad integer `{v}`")))
            .transpose()
    }

    pub fn text(&self, key: &str) -> Result<Option<&str>> {
        self.single(key)
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.single(key)? {
            None => Ok(false),
            Some("true" | "1" | "yes" | "") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => bail!("`{key}` must be true or false, got `{v}`"),
        }
    }

    pub fn kernel(&self) -> Result<Kernel> {
        match self.text("kernel")? {
            None | Some("lattice") => Ok(Kernel::Lattice),
            Some("continuum") => Ok(Kernel::Continuum),
            Some(v) => bail!("`kernel` must be lattice or continuum, got `{v}`"),
        }
    }

    /// `columns` or `shells:<factor>`.
    pub fn policy(&self) -> Result<TailPolicy> {
        match self.text("policy")? {
            None | Some("columns") => Ok(TailPolicy::Columns),
            Some(v) => {
                let factor = v
                    .strip_prefix("shells:")
                    .and_then(|f| f.parse::<f64>().ok())
                    .filter(|f| *f >= 1.0)
                    .ok_or_else(|| anyhow!("`policy` must be columns or shells:<factor >= 1>, got `{v}`"))?;
                Ok(TailPolicy::Shells { factor })
            }
        }
    }

    pub fn suites(&self) -> Result<Vec<Suite>> {
        let Some(raw) = self.raw("suite") else {
            return Ok(Suite::ALL.to_vec());
        };
        let mut out = Vec::new();
        for item in raw.iter().flat_map(|v| v.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
            out.push(item.parse::<Suite>().map_err(|e| anyhow!("{e}"))?);
        }
        if out.is_empty() {
            bail!("no suite selected");
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn format(&self) -> Result<Format> {
        match self.text("format")? {
            None | Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(v) => bail!("`format` must be csv or json, got `{v}`"),
        }
    }
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        bail!("unknown key `{key}`")
    }
}

/// `x`, `lin:a:b:n` or `log:a:b:n`.
pub fn parse_range(item: &str) -> Result<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("bad number `{s}`"));
    let Some((kind, rest)) = item.split_once(':') else {
        let v = num(item)?;
        if !v.is_finite() {
            bail!("value `{item}` is not finite");
        }
        return Ok(vec![v]);
    };
    let parts: Vec<&str> = rest.split(':').collect();
    let [a, b, n] = parts[..] else {
        bail!("range `{item}` must look like {kind}:start:stop:count");
    };
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n.trim().parse().map_err(|_| anyhow!("bad count in `{item}`"))?;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let step = |i: usize| i as f64 / (n - 1) as f64;
    match kind {
        "lin" => Ok((0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * step(i) }).collect()),
        "log" => {
            if !(a > 0.0 && b > 0.0) {
                bail!("log range `{item}` needs positive endpoints");
            }
            let (la, lb) = (a.log10(), b.log10());
            Ok((0..n).map(|i| if i == n - 1 { b } else { 10f64.powf(la + (lb - la) * step(i)) }).collect())
        }
        _ => bail!("unknown range kind `{kind}`"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}
