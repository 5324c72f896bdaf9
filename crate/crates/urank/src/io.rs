//! Dataset file I/O.
//!
//! Two formats round-trip bit-exactly for finite doubles: CSV with a header
//! row (`x1,..,xd,y`, label last) and a JSON document
//! `{"d": int, "samples": [{"x": [...], "y": num}]}`. Floats are written in
//! shortest round-trip decimal form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabeledSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// CSV text for a dataset (header + one row per sample).
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for j in 1..=ds.dim() {
        let _ = write!(out, "x{j},");
    }
    out.push_str("y\n");
    for s in ds.samples() {
        for v in &s.x {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", s.y);
    }
    out
}

/// Parse a dataset from CSV text with a `x1..xd,y` header.
pub fn from_csv_string(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let ncols = headers.len();
    if ncols < 2 || headers.get(ncols - 1) != Some("y") {
        return Err(Error::Parse(
            "expected header x1,..,xd,y with the label in the last column".into(),
        ));
    }
    let d = ncols - 1;
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != ncols {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: record.len().saturating_sub(1),
            });
        }
        let mut x = Vec::with_capacity(d);
        for field in record.iter().take(d) {
            x.push(parse_field(field, i)?);
        }
        let y = parse_field(record.get(d).unwrap_or(""), i)?;
        samples.push(LabeledSample::new(x, y));
    }
    Dataset::new(d, samples)
}

fn parse_field(field: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {}: non-numeric field {field:?}", row + 1)))
}

pub fn save_dataset(ds: &Dataset, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv_string(ds),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(ds)?;
            s.push('\n');
            s
        }
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    match format {
        Format::Csv => from_csv_string(&text),
        Format::Json => {
            let ds: Dataset = serde_json::from_str(&text)?;
            // Re-validate dims and finiteness after deserialization.
            Dataset::new(ds.dim(), ds.samples().to_vec())
        }
    }
}
