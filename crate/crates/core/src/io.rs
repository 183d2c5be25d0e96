//! CSV helpers for draws and observations.
//!
//! Numbers are written with 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Round-trip decimal form of `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn samples_to_csv(names: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_samples_csv(path: &Path, names: &[String], rows: &[Vec<f64>]) -> Result<()> {
    Ok(std::fs::write(path, samples_to_csv(names, rows))?)
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: '{}' is not a number", field.trim())))
}

/// Parses a header line plus rows of numbers with a fixed column count.
pub fn parse_samples_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty file".into()))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let row = line
            .split(',')
            .map(|f| parse_value(f, i + 1))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != names.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} columns, found {}",
                i + 1,
                names.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok((names, rows))
}

pub fn read_samples_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    parse_samples_csv(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// An observation vector: a `# model=<name> seed=<seed>` header, then one value per line.
pub fn x_star_to_csv(model: &str, seed: u64, values: &[f64]) -> String {
    let mut out = format!("# model={model} seed={seed}\n");
    for v in values {
        writeln!(out, "{}", fmt_f64(*v)).unwrap();
    }
    out
}

pub fn write_x_star(path: &Path, model: &str, seed: u64, values: &[f64]) -> Result<()> {
    Ok(std::fs::write(path, x_star_to_csv(model, seed, values))?)
}

/// Observation file contents; header fields are optional on input.
#[derive(Debug, Clone, PartialEq)]
pub struct XStarFile {
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub values: Vec<f64>,
}

pub fn parse_x_star(text: &str) -> Result<XStarFile> {
    let mut model = None;
    let mut seed = None;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            for token in header.split_whitespace() {
                match token.split_once('=') {
                    Some(("model", v)) => model = Some(v.to_string()),
                    Some(("seed", v)) => {
                        seed =
                            Some(v.parse().map_err(|_| {
                                Error::Parse(format!("line {}: bad seed '{v}'", i + 1))
                            })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        values.push(parse_value(line, i + 1)?);
    }
    if values.is_empty() {
        return Err(Error::Parse("observation file has no values".into()));
    }
    Ok(XStarFile {
        model,
        seed,
        values,
    })
}

pub fn read_x_star(path: &Path) -> Result<XStarFile> {
    let text = std::fs::read_to_string(path)?;
    parse_x_star(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_round_trip_exactly() {
        let names = vec!["a".to_string(), "b".to_string()];
        let rows = vec![
            vec![0.1, -1e-300],
            vec![std::f64::consts::PI, 12345.678901234567],
        ];
        let (n, r) = parse_samples_csv(&samples_to_csv(&names, &rows)).unwrap();
        assert_eq!(n, names);
        assert_eq!(r, rows);
    }

    #[test]
    fn ragged_rows_report_the_line() {
        let err = parse_samples_csv("a,b\n1,2\n3\n").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = parse_samples_csv("a\nx\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn x_star_round_trip() {
        let values = vec![6.24, -0.5, 1.0 / 3.0];
        let parsed = parse_x_star(&x_star_to_csv("mg1_queue", 42, &values)).unwrap();
        assert_eq!(parsed.model.as_deref(), Some("mg1_queue"));
        assert_eq!(parsed.seed, Some(42));
        assert_eq!(parsed.values, values);
        assert_eq!(parse_x_star("1.5\n2.5\n").unwrap().values, vec![1.5, 2.5]);
    }
}
