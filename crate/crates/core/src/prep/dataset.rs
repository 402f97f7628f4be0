use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::prep::PrepError;
use crate::{check_format_version, FORMAT_VERSION};

/// First line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: String,
    pub feature_names: Vec<String>,
    /// "state" or "transition".
    pub task: String,
}

impl DatasetHeader {
    pub fn new(feature_names: Vec<String>, task: &str) -> Self {
        Self { format_version: FORMAT_VERSION.to_string(), feature_names, task: task.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub features: Vec<f64>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    #[serde(default)]
    pub time: f64,
    #[serde(default)]
    pub uav_id: u32,
}

pub fn write_dataset(path: impl AsRef<Path>, header: &DatasetHeader, records: &[DatasetRecord]) -> Result<(), PrepError> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(line(header).as_bytes())?;
    for r in records {
        if r.features.len() != header.feature_names.len() {
            return Err(PrepError::ArityMismatch { expected: header.feature_names.len(), got: r.features.len() });
        }
        out.write_all(line(r).as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<(DatasetHeader, Vec<DatasetRecord>), PrepError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| PrepError::Format("missing header".into()))?;
    let header: DatasetHeader =
        serde_json::from_str(&first?).map_err(|e| PrepError::Format(format!("line 1: {e}")))?;
    check_format_version(&header.format_version).map_err(PrepError::Format)?;
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| PrepError::Format(format!("line {}: {e}", i + 1)))?;
        if r.features.len() != header.feature_names.len() {
            return Err(PrepError::ArityMismatch { expected: header.feature_names.len(), got: r.features.len() });
        }
        records.push(r);
    }
    Ok((header, records))
}

fn line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("dataset types serialize");
    s.push('\n');
    s
}
