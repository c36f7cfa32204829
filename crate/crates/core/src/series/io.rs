//! Plain-text series format: one coefficient per line as `re im`, in index
//! order `0..=N`. Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::TruncatedSeries;
use crate::error::{GftError, Result};

pub fn to_text(series: &TruncatedSeries) -> String {
    let mut out = String::new();
    for c in series.coeffs() {
        // `Display` for f64 prints the shortest decimal that round-trips.
        writeln!(out, "{} {}", c.re, c.im).expect("writing to a String cannot fail");
    }
    out
}

pub fn from_text(text: &str) -> Result<TruncatedSeries> {
    let mut coeffs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<f64> {
            let s = s.ok_or_else(|| {
                GftError::Parse(format!("line {}: expected `re im`", lineno + 1))
            })?;
            s.parse::<f64>()
                .map_err(|e| GftError::Parse(format!("line {}: {e}: {s:?}", lineno + 1)))
        };
        let re = parse(parts.next())?;
        let im = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(GftError::Parse(format!(
                "line {}: trailing fields after `re im`",
                lineno + 1
            )));
        }
        coeffs.push(Complex64::new(re, im));
    }
    TruncatedSeries::new(coeffs)
}
