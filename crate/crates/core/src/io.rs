//! Text file formats.
//!
//! CSV files are comma separated with a header row and one newline-terminated
//! record per line; reals are written with 17 significant digits
//! (`{:.16e}`), which round-trips every `f64` exactly. JSON sidecars are
//! pretty-printed and parsed strictly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CsError, Result};

/// 17-significant-digit scientific text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `index,value` CSV text.
pub fn vector_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_f64(*v));
    }
    out
}

/// CSV text with header `c0,…,c{n-1}` and one line per matrix row.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = (0..m.ncols())
        .map(|j| format!("c{j}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CsError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_vector_csv(path: &Path, values: &[f64]) -> Result<()> {
    write_text(path, &vector_csv(values))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(path, &matrix_csv(m))
}

fn parse_err(path: &Path, message: String) -> CsError {
    CsError::Parse {
        path: path.to_path_buf(),
        message,
    }
}

/// Parses numeric CSV text (header skipped) into rows.
fn parse_rows(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty file".into()))?;
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, format!("line {}: {e}", i + 2)))?;
        if row.len() != width {
            return Err(parse_err(
                path,
                format!("line {}: expected {width} fields, found {}", i + 2, row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads the last column of a CSV file (`index,value` or
/// `segment,finger,value`).
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let rows = parse_rows(path, &read_text(path)?)?;
    if rows.is_empty() {
        return Err(parse_err(path, "no data rows".into()));
    }
    Ok(DVector::from_iterator(
        rows.len(),
        rows.iter().map(|r| *r.last().expect("rows have at least one field")),
    ))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = parse_rows(path, &read_text(path)?)?;
    if rows.is_empty() {
        return Err(parse_err(path, "no data rows".into()));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &json_string(value))
}

/// Strict JSON read; parse errors carry line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}

/// Serializes non-finite reals as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}
