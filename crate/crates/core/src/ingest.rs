//! Newline-delimited numeric input.
//!
//! One value per line. Blank lines and lines whose first non-blank character
//! is `#` are skipped. Line numbers in errors are 1-based.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sample::Sample;

pub fn ingest(path: &Path, censor: Option<f64>) -> Result<Sample> {
    let text = fs::read_to_string(path)?;
    parse_values(&text, censor)
}

pub fn parse_values(text: &str, censor: Option<f64>) -> Result<Sample> {
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = match trimmed.parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => {
                return Err(Error::Parse {
                    line,
                    text: trimmed.to_string(),
                })
            }
        };
        if value < 0.0 {
            return Err(Error::NegativeLine { line, value });
        }
        values.push(value);
        lines.push(line);
    }
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let x0 = censor.unwrap_or(0.0);
    if !(x0.is_finite() && x0 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "censoring threshold must be finite and non-negative, got {x0}"
        )));
    }
    let below: Vec<usize> = values
        .iter()
        .zip(&lines)
        .filter(|(&v, _)| v < x0)
        .map(|(_, &l)| l)
        .collect();
    if !below.is_empty() {
        return Err(Error::BelowThresholdLines { x0, lines: below });
    }
    Sample::censored(values, x0)
}
