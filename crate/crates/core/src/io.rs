// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV ingestion and JSON report envelopes.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Series;

/// Reads a rectangular numeric CSV; row `t` of the file becomes `Z_t`.
///
/// Cells must parse as finite numbers. Row and column numbers in errors
/// are 1-based and count data rows only.
pub fn load_csv(path: &Path, has_header: bool) -> Result<Series> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut values = Vec::new();
    let mut dim = None;
    let mut len = 0usize;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    col: d.min(record.len()) + 1,
                    msg: format!("expected {d} columns, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row,
                col: j + 1,
                msg: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    col: j + 1,
                    msg: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
        len += 1;
    }
    let Some(dim) = dim else {
        return Err(Error::EmptyFile(path.to_path_buf()));
    };
    Series::new(values, len, dim)
}

/// Writes one row per time point, no header. Floats use the shortest
/// representation that round-trips.
pub fn write_series_csv<W: Write>(w: W, series: &Series) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in series.rows() {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_series_csv(path: &Path, series: &Series) -> Result<()> {
    write_series_csv(File::create(path)?, series)
}

/// Two-column curve with header `k,value`.
pub fn write_curve_csv<W: Write>(w: W, points: impl Iterator<Item = (usize, f64)>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "value"])?;
    for (k, v) in points {
        out.write_record([k.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Wrapper written by every command: the payload plus everything needed
/// to rerun it. Only `timing` varies between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope<C, P> {
    pub tool_version: String,
    pub command: String,
    pub config: C,
    pub payload: P,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: f64,
}

impl<C, P> ReportEnvelope<C, P> {
    pub fn new(command: &str, config: C, payload: P) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            payload,
            timing: None,
        }
    }

    pub fn with_timing(mut self, wall_ms: f64) -> Self {
        self.timing = Some(Timing { wall_ms });
        self
    }
}

impl<C: Serialize, P: Serialize> ReportEnvelope<C, P> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Drops the `timing` field from a serialized envelope so two runs can be
/// compared byte for byte.
pub fn strip_timing(json: &str) -> Result<String> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timing");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}
