//! Matrix files and atomic output.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{DivselError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Tsv,
}

impl MatrixFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            MatrixFormat::Csv => b',',
            MatrixFormat::Tsv => b'\t',
        }
    }

    /// `.tsv` and `.tab` files are tab-separated; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "tsv" || e == "tab" => MatrixFormat::Tsv,
            _ => MatrixFormat::Csv,
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> DivselError {
    DivselError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Parses a rectangular numeric table. A first row with any non-numeric cell
/// is taken as a header and skipped.
pub fn parse_matrix(text: &str, format: MatrixFormat, origin: &str) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_error = |line: usize, message: String| DivselError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(index + 1, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(|c| c.parse::<f64>()).collect();
        if index == 0 && parsed.iter().any(|p| p.is_err()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_error(line, format!("expected {w} cells, found {}", record.len())));
            }
            _ => {}
        }
        for (col, (cell, p)) in record.iter().zip(parsed).enumerate() {
            match p {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(parse_error(line, format!("cell {} ('{cell}') is not a finite number", col + 1)));
                }
            }
        }
        rows += 1;
    }
    let Some(cols) = width else {
        return Err(parse_error(1, "no numeric rows".into()));
    };
    Array2::from_shape_vec((rows, cols), values).map_err(|e| parse_error(1, e.to_string()))
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_matrix(&text, format, &path.display().to_string())
}

/// Renders a matrix with shortest round-trip number formatting (lossless).
pub fn format_matrix(m: &Array2<f64>, format: MatrixFormat) -> String {
    let sep = format.delimiter() as char;
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(&sep.to_string()));
        out.push('\n');
    }
    out
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

pub fn write_matrix(path: &Path, m: &Array2<f64>, format: MatrixFormat) -> Result<()> {
    write_atomic(path, format_matrix(m, format).as_bytes())
}
