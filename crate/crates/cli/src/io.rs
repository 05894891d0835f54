//! CSV and JSON emission and ingestion.
//!
//! Sample files have one row per sample and m·d columns, element-major, under
//! a header `e1_c1, …, e1_cd, e2_c1, …`. Floats are written in the shortest
//! form that parses back to the same value.

use std::fs;
use std::path::Path;

use rkhm::{Block, StructuredSample};
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:?}")
    }
}

pub fn sample_header(m: usize, d: usize) -> Vec<String> {
    (1..=m)
        .flat_map(|i| (1..=d).map(move |j| format!("e{i}_c{j}")))
        .collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

/// Writes a header and rows of already formatted fields.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_samples(path: &Path, samples: &[StructuredSample]) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| CliError::Validation("no samples to write".into()))?;
    let header = sample_header(first.m(), first.d());
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|x| x.to_flat().into_iter().map(fmt_f64).collect())
        .collect();
    write_csv(path, &header, &rows)
}

/// Reads a headed CSV of numbers into rows of equal width.
pub fn read_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    CliError::io(path, format!("row {}: cannot parse {field:?} as a number", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::io(path, "no data rows"));
    }
    Ok(rows)
}

/// Reads structured samples; `d` defaults to the row width divided by `m`.
pub fn read_samples(path: &Path, m: usize, d: Option<usize>) -> Result<Vec<StructuredSample>> {
    let rows = read_table(path)?;
    let width = rows[0].len();
    if m == 0 || width % m != 0 {
        return Err(CliError::Validation(format!(
            "m = {m} does not divide the sample width {width}"
        )));
    }
    let d = d.unwrap_or(width / m);
    if m * d != width {
        return Err(CliError::Validation(format!(
            "m·d = {} does not match the sample width {width}",
            m * d
        )));
    }
    rows.iter()
        .enumerate()
        .map(|(t, row)| {
            if row.len() != width {
                return Err(CliError::io(path, format!("row {} has {} fields, expected {width}", t + 1, row.len())));
            }
            Ok(StructuredSample::from_flat(row, m)?)
        })
        .collect()
}

/// Reads one label per row from a CSV with a `label` header.
pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::io(path, e))?;
            Ok(rec.get(0).unwrap_or("").to_string())
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// A complex matrix as row-major real and imaginary parts.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&Block> for ComplexMatrix {
    fn from(b: &Block) -> Self {
        let m = b.dim();
        ComplexMatrix {
            re: (0..m).map(|i| (0..m).map(|j| b[(i, j)].re).collect()).collect(),
            im: (0..m).map(|i| (0..m).map(|j| b[(i, j)].im).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct ComplexVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&[rkhm::C64]> for ComplexVector {
    fn from(v: &[rkhm::C64]) -> Self {
        ComplexVector {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}
