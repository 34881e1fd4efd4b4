//! Text formats.
//!
//! Matrices are headerless, row-major CSV of decimal `f64`. An encoded
//! transform is a directory holding `params.txt` (`key=value` lines),
//! `F.csv` and `supports.txt` (one line per row of F, space-separated 1-based
//! column indices).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::encode::EncodedTransform;
use crate::error::{Error, Result};
use crate::generator::{GeneratorKind, GeneratorMatrix};
use crate::params::CodeParams;

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn csv_err(path: &Path, err: csv::Error) -> Error {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        format_err(path, err.to_string())
    }
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    format_err(path, format!("row {}: cannot parse {field:?}", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(format_err(path, "empty matrix"));
    }
    let cols = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(format_err(
            path,
            format!("row {} has {} fields, expected {cols}", bad + 1, rows[bad].len()),
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Reads a vector stored either as one row or one column.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix_csv(path)?;
    if m.nrows() != 1 && m.ncols() != 1 {
        return Err(format_err(
            path,
            format!("expected a single row or column, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.iter().copied().collect())
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

/// Writes a column vector, one value per line.
pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    write_matrix_csv(path, &DMatrix::from_column_slice(v.len(), 1, v))
}

fn params_text(code: &EncodedTransform) -> String {
    let p = code.params();
    let mut lines = vec![
        format!("P={}", p.p()),
        format!("K={}", p.k()),
        format!("M={}", p.m()),
        format!("N={}", p.n()),
        format!("N_raw={}", p.n_raw()),
    ];
    match code.generator().kind() {
        GeneratorKind::Vandermonde { nodes } => {
            lines.push("kind=vandermonde".into());
            let nodes: Vec<String> = nodes.iter().map(|h| h.to_string()).collect();
            lines.push(format!("nodes={}", nodes.join(",")));
        }
        GeneratorKind::Gaussian { seed } => {
            lines.push("kind=gaussian".into());
            lines.push(format!("seed={seed}"));
        }
    }
    lines.push(format!("zero_tolerance={}", code.zero_tolerance()));
    lines.join("\n") + "\n"
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format_err(path, format!("line {}: expected key=value", n + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn get<'a>(map: &'a BTreeMap<String, String>, key: &str, path: &Path) -> Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| format_err(path, format!("missing key {key}")))
}

fn parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<T> {
    let raw = get(map, key, path)?;
    raw.parse()
        .map_err(|_| format_err(path, format!("cannot parse {key}={raw}")))
}

pub fn save_transform(dir: &Path, code: &EncodedTransform) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("params.txt"), params_text(code))?;
    write_matrix_csv(&dir.join("F.csv"), code.f())?;
    let supports: Vec<String> = code
        .supports()
        .iter()
        .map(|s| s.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(" "))
        .collect();
    fs::write(dir.join("supports.txt"), supports.join("\n") + "\n")?;
    Ok(())
}

pub fn load_transform(dir: &Path) -> Result<EncodedTransform> {
    let params_path = dir.join("params.txt");
    let map = parse_key_values(&fs::read_to_string(&params_path)?, &params_path)?;
    let p: usize = parse(&map, "P", &params_path)?;
    let k: usize = parse(&map, "K", &params_path)?;
    let m: usize = parse(&map, "M", &params_path)?;
    let n: usize = parse(&map, "N", &params_path)?;
    let n_raw: usize = parse(&map, "N_raw", &params_path)?;
    let params = CodeParams::new(p, k, m, n_raw)?;
    if params.n() != n {
        return Err(format_err(&params_path, format!("N={n} inconsistent with N_raw={n_raw}, P={p}")));
    }
    let generator = match get(&map, "kind", &params_path)? {
        "vandermonde" => {
            let nodes = get(&map, "nodes", &params_path)?
                .split(',')
                .map(|h| {
                    h.trim()
                        .parse::<f64>()
                        .map_err(|_| format_err(&params_path, format!("bad node {h:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            GeneratorMatrix::vandermonde(nodes, k)?
        }
        "gaussian" => GeneratorMatrix::gaussian(p, k, parse(&map, "seed", &params_path)?),
        other => return Err(format_err(&params_path, format!("unknown generator kind {other:?}"))),
    };
    let zero_tolerance: f64 = match map.get("zero_tolerance") {
        Some(_) => parse(&map, "zero_tolerance", &params_path)?,
        None => 0.0,
    };

    let f = read_matrix_csv(&dir.join("F.csv"))?;
    let supports_path = dir.join("supports.txt");
    let supports = fs::read_to_string(&supports_path)?
        .lines()
        .map(|line| {
            line.split_whitespace()
                .map(|tok| match tok.parse::<usize>() {
                    Ok(j) if j >= 1 => Ok(j - 1),
                    _ => Err(format_err(&supports_path, format!("bad column index {tok:?}"))),
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    EncodedTransform::from_parts(f, supports, generator, params, zero_tolerance)
}
