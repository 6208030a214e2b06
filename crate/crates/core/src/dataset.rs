use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed responses and a dense row-major predictor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    d: usize,
    feature_names: Option<Vec<String>>,
}

/// Observed span of one predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl Dataset {
    /// Builds a dataset from responses and predictor rows.
    pub fn new(y: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidData("ragged predictor rows".into()));
        }
        let x = rows.into_iter().flatten().collect();
        Self::from_flat(y, x, d)
    }

    /// Builds a dataset from a row-major `n × d` buffer.
    pub fn from_flat(y: Vec<f64>, x: Vec<f64>, d: usize) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 observations, got {n}")));
        }
        if d == 0 {
            return Err(Error::InvalidData("need at least one predictor".into()));
        }
        if x.len() != n * d {
            return Err(Error::InvalidData(format!(
                "predictor matrix has {} entries, expected {n} x {d}",
                x.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("response {i} is not finite")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "predictor ({}, {}) is not finite",
                i / d,
                i % d
            )));
        }
        Ok(Self {
            y,
            x,
            d,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: self.d,
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }

    #[inline]
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.x[i * self.d + k]
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Rows `indices` (repetitions allowed) as a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let y = indices.iter().map(|&i| self.y[i]).collect();
        let x = indices
            .iter()
            .flat_map(|&i| self.row(i).iter().copied())
            .collect();
        let mut out = Self::from_flat(y, x, self.d)?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    pub fn feature_ranges(&self) -> Vec<FeatureRange> {
        (0..self.d)
            .map(|k| {
                let (min, max) = (0..self.n())
                    .map(|i| self.value(i, k))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                FeatureRange { min, max }
            })
            .collect()
    }

    /// True when some predictor takes at least two distinct values.
    pub fn has_variation(&self) -> bool {
        self.feature_ranges().iter().any(|r| r.min < r.max)
    }

    /// Reads a CSV with a header row; the column named `y` is the response and
    /// every other column is a predictor, in file order.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let y_col = headers
            .iter()
            .position(|h| h == "y")
            .ok_or_else(|| Error::InvalidData("no column named `y`".into()))?;
        let names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y_col)
            .map(|(_, h)| h.to_string())
            .collect();
        let (y, x) = read_numeric_rows(&mut rdr, headers.len(), Some(y_col))?;
        Self::from_flat(y, x, names.len())?.with_feature_names(names)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// Reads a predictor-only CSV (header required; a `y` column, if present, is
/// ignored). Returns the column names and the row-major matrix.
pub fn read_predictor_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let y_col = headers.iter().position(|h| h == "y");
    let names = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != y_col)
        .map(|(_, h)| h.to_string())
        .collect();
    let (_, x) = read_numeric_rows(&mut rdr, headers.len(), y_col)?;
    Ok((names, x))
}

fn read_numeric_rows<R: Read>(
    rdr: &mut csv::Reader<R>,
    width: usize,
    y_col: Option<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(Error::InvalidData(format!(
                "row {} has {} fields, expected {width}",
                line + 1,
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidData(format!("row {}: `{field}` is not a number", line + 1))
            })?;
            if Some(j) == y_col {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    Ok((y, x))
}
