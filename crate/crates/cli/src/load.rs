//! CSV ingestion with line-numbered diagnostics.

use crate::run::CliError;
use lpanova::data::Dataset;
use lpanova::vcm::VcmDataset;
use std::path::Path;

/// Parse every row into `width` floats, reporting the 1-based line number
/// of the first malformed, nonfinite, or wrong-width row.
fn read_rows(path: &Path, has_header: bool) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(rows.len() as u64 + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue; // blank line
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(CliError::Input(format!(
                    "{}: line {line}: expected {w} columns, found {}",
                    path.display(),
                    record.len()
                )));
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: line {line}, column {}: cannot parse '{field}' as a number",
                    path.display(),
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{}: line {line}, column {}: nonfinite value '{field}'",
                    path.display(),
                    col + 1
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Two-column (x, y) dataset.
pub fn load_bivariate(path: &Path, has_header: bool) -> Result<Dataset, CliError> {
    let rows = read_rows(path, has_header)?;
    if rows[0].len() != 2 {
        return Err(CliError::Input(format!(
            "{}: expected 2 columns (x, y), found {}",
            path.display(),
            rows[0].len()
        )));
    }
    let x = rows.iter().map(|r| r[0]).collect();
    let y = rows.iter().map(|r| r[1]).collect();
    Dataset::new(x, y).map_err(CliError::Lib)
}

/// Columns (u, x2..xd, y); the intercept covariate x1 = 1 is implicit.
pub fn load_vcm(path: &Path, has_header: bool) -> Result<VcmDataset, CliError> {
    let rows = read_rows(path, has_header)?;
    let w = rows[0].len();
    if w < 2 {
        return Err(CliError::Input(format!(
            "{}: expected at least 2 columns (u, [x2..xd,] y), found {w}",
            path.display()
        )));
    }
    let d = w - 1; // implicit intercept plus w - 2 explicit covariates
    let n = rows.len();
    let mut u = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for row in &rows {
        u.push(row[0]);
        x.push(1.0);
        x.extend_from_slice(&row[1..w - 1]);
        y.push(row[w - 1]);
    }
    VcmDataset::new(u, x, y, d).map_err(CliError::Lib)
}
