//! CSV formats: every file has a header row and a fixed column order.

use std::path::Path;

use sgdct_core::engine::Checkpoint;
use sgdct_core::StateVector;

use crate::error::{Error, Result};

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// `prefix_1, …, prefix_n`
pub fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Trajectory dump with columns `t,theta_1..theta_k,x_1..x_m`.
pub fn write_trajectory(path: &Path, checkpoints: &[Checkpoint]) -> Result<()> {
    let (k, m) = checkpoints.first().map(|c| (c.theta.len(), c.x.len())).unwrap_or((0, 0));
    let mut header = vec!["t".to_string()];
    header.extend(numbered("theta", k));
    header.extend(numbered("x", m));
    let rows = checkpoints.iter().map(|c| {
        std::iter::once(c.t)
            .chain(c.theta.iter().copied())
            .chain(c.x.iter().copied())
            .map(num)
            .collect()
    });
    write_csv(path, &header, rows)
}

/// Reads an observed path with header `t,x_1..x_m`.
pub fn read_path_csv(path: &Path) -> Result<Vec<(f64, StateVector)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let m = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string()).chain(numbered("x", m)).collect();
    if m == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(csv_error(path, format!("header must be `{}`", expected.join(","))));
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_error(path, format!("line {line}: {e}")))?;
        let values: Vec<f64> = record
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| csv_error(path, format!("line {line}: expected {} finite numbers", m + 1)))?;
        let x = StateVector::from_slice(&values[1..]).map_err(|e| csv_error(path, format!("line {line}: {e}")))?;
        out.push((values[0], x));
    }
    Ok(out)
}
