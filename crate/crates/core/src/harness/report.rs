//! Deterministic report emission. JSON for machine consumption, CSV for
//! plot-ready columns; identical values produce byte-identical output
//! (floats use Rust's shortest-roundtrip formatting).

use crate::error::{Error, Result};
use serde::Serialize;
use std::path::Path;

pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, json_string(value)?)?;
    Ok(())
}

/// CSV with a frozen header; fields must not contain commas or newlines.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        debug_assert!(row.iter().all(|f| !f.contains(',') && !f.contains('\n')));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(header, rows))?;
    Ok(())
}
