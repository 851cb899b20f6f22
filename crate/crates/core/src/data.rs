//! Training data ingestion.

use std::path::Path;

use crate::error::{Error, Result};

/// Rows of training observations with their column names.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Parses CSV text with a header row. When `expected_columns` is given the
/// header must have exactly that many columns.
pub fn parse_training_data(text: &str, expected_columns: Option<usize>) -> std::result::Result<TrainingData, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err("missing header row".into());
    }
    if let Some(n) = expected_columns {
        if header.len() != n {
            return Err(format!("header has {} columns, the model has {n} variables", header.len()));
        }
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| format!("line {line}: {e}"))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                let v: f64 = field
                    .parse()
                    .map_err(|_| format!("line {line}, column {}: cannot parse {field:?}", c + 1))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("line {line}, column {}: non-finite value {field}", c + 1))
                }
            })
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        rows.push(row);
    }
    Ok(TrainingData { header, rows })
}

/// Reads a training-data CSV file. See [`parse_training_data`].
pub fn load_training_data(path: &Path, expected_columns: Option<usize>) -> Result<TrainingData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_training_data(&text, expected_columns).map_err(|message| Error::Data {
        path: path.to_path_buf(),
        message,
    })
}
