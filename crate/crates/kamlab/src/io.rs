//! Deterministic CSV / JSON emission.
//!
//! CSV contract: comma separators, '.' decimal, 17 significant digits, a
//! header row, LF line endings. JSON artifacts embed the resolved run
//! configuration so every output is auditable on its own.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::grid::GridField;
use crate::{KamError, Tolerances};

/// Resolved configuration of one CLI run, embedded in every JSON artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: String,
    pub n: usize,
    pub h: f64,
    pub tolerances: Tolerances,
    pub output_prefix: Option<String>,
}

/// Formats one value with 17 significant digits (round-trip exact for f64).
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes equally long columns under a comma-separated header.
pub fn write_csv(path: &Path, header: &str, columns: &[&[f64]]) -> Result<(), KamError> {
    let rows = columns.first().map(|c| c.len()).unwrap_or(0);
    assert!(
        columns.iter().all(|c| c.len() == rows),
        "csv columns must have equal length"
    );
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(header.as_bytes())?;
    out.write_all(b"\n")?;
    for r in 0..rows {
        let line = columns
            .iter()
            .map(|c| fmt(c[r]))
            .collect::<Vec<_>>()
            .join(",");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes grid fields as columns, prefixed by the node abscissa column `x`.
pub fn write_grid_csv(path: &Path, names: &[&str], fields: &[&GridField]) -> Result<(), KamError> {
    assert_eq!(names.len(), fields.len());
    let n = fields.first().map(|f| f.len()).unwrap_or(0);
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let mut header = String::from("x");
    for name in names {
        header.push(',');
        header.push_str(name);
    }
    let mut columns: Vec<&[f64]> = vec![&xs];
    for f in fields {
        columns.push(f.values());
    }
    write_csv(path, &header, &columns)
}

/// Writes `{"config": ..., "result": ...}` as pretty JSON with LF endings.
pub fn write_json<T: Serialize>(
    path: &Path,
    config: &RunConfig,
    result: &T,
) -> Result<(), KamError> {
    #[derive(Serialize)]
    struct Artifact<'a, T> {
        config: &'a RunConfig,
        result: &'a T,
    }
    let text = serde_json::to_string_pretty(&Artifact { config, result })
        .map_err(|e| KamError::Config(format!("json serialization failed: {e}")))?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Reads the first numeric column of a CSV written by this crate (skipping
/// the header) or a plain list of numbers, selecting column `col`.
pub fn read_csv_column(path: &Path, col: usize) -> Result<Vec<f64>, KamError> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.split(',').nth(col).ok_or_else(|| {
            KamError::Config(format!("{}: line {} has no column {col}", path.display(), lineno + 1))
        })?;
        match field.trim().parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if lineno == 0 => continue, // header row
            Err(e) => {
                return Err(KamError::Config(format!(
                    "{}: line {}: {e}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(values)
}
