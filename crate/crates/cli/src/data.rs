//! CSV ingestion and export.

use std::io::{Read, Write};
use std::path::Path;

use civqr_core::{Dataset, Observation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which CSV columns feed which part of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub y_col: String,
    pub delta_col: String,
    pub z_cols: Vec<String>,
    pub w_cols: Vec<String>,
    pub add_intercept_z: bool,
    pub add_intercept_w: bool,
}

impl ColumnSpec {
    /// Coefficient labels in regressor order.
    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.add_intercept_z {
            names.push("intercept".to_string());
        }
        names.extend(self.z_cols.iter().cloned());
        names
    }

    pub fn instrument_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.add_intercept_w {
            names.push("intercept".to_string());
        }
        names.extend(self.w_cols.iter().cloned());
        names
    }
}

/// Rows are numbered from 1 for the first data line after the header.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': duration {value} is not positive")]
    NonPositive {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("row {row}, column '{column}': censoring indicator must be 0 or 1, got '{value}'")]
    NonBinary {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': value {value} is not finite")]
    NotFinite {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("no columns given for {0}")]
    NoColumns(&'static str),
    #[error(transparent)]
    Invalid(#[from] civqr_core::Error),
}

pub fn load_csv(path: &Path, spec: &ColumnSpec) -> Result<Dataset, LoadError> {
    let file = std::fs::File::open(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_csv_from_reader(file, spec)
}

pub fn load_csv_from_reader<R: Read>(reader: R, spec: &ColumnSpec) -> Result<Dataset, LoadError> {
    if spec.z_cols.is_empty() && !spec.add_intercept_z {
        return Err(LoadError::NoColumns("regressors"));
    }
    if spec.w_cols.is_empty() && !spec.add_intercept_w {
        return Err(LoadError::NoColumns("instruments"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index = |name: &str| -> Result<usize, LoadError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| LoadError::MissingColumn(name.to_string()))
    };
    let y_idx = index(&spec.y_col)?;
    let delta_idx = index(&spec.delta_col)?;
    let z_idx = spec
        .z_cols
        .iter()
        .map(|c| index(c))
        .collect::<Result<Vec<_>, _>>()?;
    let w_idx = spec
        .w_cols
        .iter()
        .map(|c| index(c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut observations = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let number = |idx: usize, column: &str| -> Result<f64, LoadError> {
            let raw = record.get(idx).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| LoadError::NotNumeric {
                row,
                column: column.to_string(),
                value: raw.to_string(),
            })?;
            if !value.is_finite() {
                return Err(LoadError::NotFinite {
                    row,
                    column: column.to_string(),
                    value,
                });
            }
            Ok(value)
        };
        let y = number(y_idx, &spec.y_col)?;
        if y <= 0.0 {
            return Err(LoadError::NonPositive {
                row,
                column: spec.y_col.clone(),
                value: y,
            });
        }
        let raw_delta = record.get(delta_idx).unwrap_or("").trim();
        let delta = match raw_delta.parse::<f64>() {
            Ok(1.0) => true,
            Ok(0.0) => false,
            _ => {
                return Err(LoadError::NonBinary {
                    row,
                    column: spec.delta_col.clone(),
                    value: raw_delta.to_string(),
                })
            }
        };
        let mut z = Vec::with_capacity(z_idx.len() + 1);
        if spec.add_intercept_z {
            z.push(1.0);
        }
        for (&idx, name) in z_idx.iter().zip(&spec.z_cols) {
            z.push(number(idx, name)?);
        }
        let mut w = Vec::with_capacity(w_idx.len() + 1);
        if spec.add_intercept_w {
            w.push(1.0);
        }
        for (&idx, name) in w_idx.iter().zip(&spec.w_cols) {
            w.push(number(idx, name)?);
        }
        observations.push(Observation::new(y, delta, z, w));
    }
    let dataset = Dataset::new(observations);
    dataset.ensure_valid()?;
    log::info!(
        "loaded {} rows, {:.1}% censored",
        dataset.len(),
        100.0 * dataset.censored_fraction()
    );
    Ok(dataset)
}

/// Column spec matching the layout written by [`write_csv`].
pub fn export_spec(dataset: &Dataset) -> ColumnSpec {
    ColumnSpec {
        y_col: "y".into(),
        delta_col: "delta".into(),
        z_cols: (1..=dataset.k()).map(|i| format!("z{i}")).collect(),
        w_cols: (1..=dataset.l()).map(|i| format!("w{i}")).collect(),
        add_intercept_z: false,
        add_intercept_w: false,
    }
}

/// Writes `y, delta, z1.., w1..`; floats use the shortest representation
/// that parses back to the same value.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<(), csv::Error> {
    let spec = export_spec(dataset);
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![spec.y_col.clone(), spec.delta_col.clone()];
    header.extend(spec.z_cols.iter().cloned());
    header.extend(spec.w_cols.iter().cloned());
    wtr.write_record(&header)?;
    for o in dataset.observations() {
        let mut rec = vec![o.y.to_string(), u8::from(o.delta).to_string()];
        rec.extend(o.z.iter().map(f64::to_string));
        rec.extend(o.w.iter().map(f64::to_string));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
