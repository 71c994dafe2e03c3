//! Tables, number formatting and the CSV / JSON writers.

use std::io::Write;

use anyhow::Result;
use serde_json::{json, Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest round-trip text; exponent form when `|x| ≥ 1e6` or `0 < |x| < 1e-4`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Rows of one mode with a fixed column set.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows whose `status` column reads `error`.
    pub fn failures(&self) -> usize {
        let Some(i) = self.columns.iter().position(|c| *c == "status") else {
            return 0;
        };
        self.rows.iter().filter(|r| r[i] == Cell::Text("error".into())).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: &'static str,
    pub mode: String,
    pub config_hash: String,
    pub threads: usize,
    pub tolerances: Vec<(&'static str, f64)>,
}

pub fn write<W: Write>(out: W, format: Format, manifest: &Manifest, table: &Table) -> Result<()> {
    match format {
        Format::Csv => write_csv(out, manifest, table),
        Format::Json => write_json(out, manifest, table),
    }
}

fn write_csv<W: Write>(mut out: W, manifest: &Manifest, table: &Table) -> Result<()> {
    writeln!(out, "# polaron {}", manifest.version)?;
    writeln!(out, "# mode={}", manifest.mode)?;
    writeln!(out, "# config_sha256={}", manifest.config_hash)?;
    writeln!(out, "# threads={}", manifest.threads)?;
    for (k, v) in &manifest.tolerances {
        writeln!(out, "# {k}={}", format_number(*v))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<W: Write>(mut out: W, manifest: &Manifest, table: &Table) -> Result<()> {
    let tolerances: Map<String, Value> = manifest.tolerances.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| Value::Object(table.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect()))
        .collect();
    let doc = json!({
        "manifest": {
            "version": manifest.version,
            "mode": manifest.mode,
            "config_sha256": manifest.config_hash,
            "threads": manifest.threads,
            "tolerances": tolerances,
        },
        "columns": table.columns,
        "rows": rows,
    });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_switches_to_exponent() {
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(-211.31), "-211.31");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1e6), "1e6");
        assert_eq!(format_number(999999.5), "999999.5");
        assert_eq!(format_number(1e-4), "0.0001");
        assert_eq!(format_number(-3.5e-5), "-3.5e-5");
        assert_eq!(format_number(0.1 + 0.2), "0.30000000000000004");
    }

    #[test]
    fn csv_quotes_text_with_commas() {
        let mut t = Table::new(vec!["status", "error"]);
        t.push(vec!["error".into(), "bad, worse".into()]);
        let m = Manifest { version: "0", mode: "x".into(), config_hash: "h".into(), threads: 1, tolerances: vec![] };
        let mut buf = Vec::new();
        write(&mut buf, Format::Csv, &m, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("status,error\nerror,\"bad, worse\"\n"), "{text}");
        assert_eq!(t.failures(), 1);
    }

    #[test]
    fn json_maps_nonfinite_to_null() {
        let mut t = Table::new(vec!["v"]);
        t.push(vec![Cell::Num(f64::NAN)]);
        let m = Manifest { version: "0", mode: "x".into(), config_hash: "h".into(), threads: 1, tolerances: vec![] };
        let mut buf = Vec::new();
        write(&mut buf, Format::Json, &m, &t).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][0]["v"], Value::Null);
    }
}
