//! CSV emission.

use std::io::Write;
use std::path::Path;

use crate::CliError;

pub const HEADER: [&str; 7] = ["P", "snr_db", "ebn0_db", "rate_bits", "rate_nats", "ci_bits", "method"];

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub p: f64,
    pub snr_db: f64,
    pub ebn0_db: f64,
    pub rate_bits: f64,
    pub rate_nats: f64,
    pub ci_bits: f64,
    pub method: String,
}

/// At most 12 significant digits, in the shortest form that parses back to
/// the rounded value.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    // avoid "-0"
    if rounded == 0.0 {
        return "0".into();
    }
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn sort_rows(rows: &mut [CsvRow]) {
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.p.total_cmp(&b.p)));
}

/// Renders metadata comment lines and rows.
pub fn render(rows: &[CsvRow], meta: &[String]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    for m in meta {
        for line in m.lines() {
            writeln!(buf, "# {line}").expect("write to memory");
        }
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([fmt12(r.p), fmt12(r.snr_db), fmt12(r.ebn0_db), fmt12(r.rate_bits), fmt12(r.rate_nats), fmt12(r.ci_bits), r.method.clone()])?;
    }
    w.into_inner().map_err(|e| CliError::Numerical(format!("csv buffer: {e}")))
}

pub fn emit_csv(rows: &[CsvRow], meta: &[String], path: Option<&Path>) -> Result<(), CliError> {
    let bytes = render(rows, meta)?;
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io { path: p.to_path_buf(), source: e }),
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e }),
    }
}

/// Reads rows back, skipping `#` lines.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CliError> { rec.get(i).unwrap_or("").parse().map_err(|_| CliError::Numerical(format!("bad number in column {}", HEADER[i]))) };
        rows.push(CsvRow {
            p: num(0)?,
            snr_db: num(1)?,
            ebn0_db: num(2)?,
            rate_bits: num(3)?,
            rate_nats: num(4)?,
            ci_bits: num(5)?,
            method: rec.get(6).unwrap_or("").to_string(),
        });
    }
    Ok(rows)
}
