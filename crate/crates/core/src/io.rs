//! Plain-text matrix format shared by feature and affinity files.
//!
//! The first line holds `rows cols`; each following line holds one row of
//! whitespace-separated decimal floats. Values are written with Rust's
//! shortest round-trip formatting, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Parses the text matrix format.
pub fn parse_matrix(text: &str) -> Result<Array2<f64>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad header token {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!(
            "header must hold exactly two integers, found {header:?}"
        )));
    };

    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (r, line) in lines.enumerate() {
        if r >= rows {
            return Err(Error::Parse(format!("more than the declared {rows} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {r}: bad value {tok:?}: {e}")))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!(
                "row {r}: expected {cols} values, found {}",
                data.len() - before
            )));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse(format!("expected {rows} rows, found {seen}")));
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse(e.to_string()))
}

/// Formats a matrix in the text matrix format.
pub fn format_matrix(m: ArrayView2<'_, f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: ArrayView2<'_, f64>) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}
