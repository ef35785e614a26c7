//! CSV/JSON emission helpers shared by the exporters and the experiment
//! runner.
//!
//! Floats are written with a fixed 17-significant-digit scientific format so
//! that files round-trip exactly and identical runs produce byte-identical
//! artifacts.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits (round-trip safe for f64).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV file with the given header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch(format!(
                "row with {} fields under a {}-column header in {}",
                row.len(),
                header.len(),
                path.display()
            )));
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes pretty-printed JSON.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Post-write schema check: the file exists, its header matches, and every
/// field of every row parses as a float (columns listed in `text_columns`
/// are exempt from the numeric check).
pub fn verify_csv_schema(path: &Path, header: &[&str], text_columns: &[&str]) -> Result<()> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let found = r
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    let expected: Vec<&str> = header.to_vec();
    if found.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Config(format!(
            "{}: header {:?} does not match schema {:?}",
            path.display(),
            found,
            expected
        )));
    }
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for (field, name) in record.iter().zip(header) {
            if text_columns.contains(name) {
                continue;
            }
            if field.parse::<f64>().is_err() {
                return Err(Error::Config(format!(
                    "{}: row {}, column {name}: non-numeric field {field:?}",
                    path.display(),
                    line + 2
                )));
            }
        }
    }
    Ok(())
}

/// Post-write check that a file parses as JSON.
pub fn verify_json(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str::<serde_json::Value>(&text)
        .map_err(|e| Error::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    Ok(())
}
