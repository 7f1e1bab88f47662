//! Reader for the LIBSVM sparse text format:
//! `<label> <index>:<value> ...`, one instance per line, 1-based ascending
//! indices.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub labels: Vec<f64>,
    /// Zero-based `(feature, value)` pairs per row, ascending by feature.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Largest 1-based index seen.
    pub dim: usize,
}

impl SparseDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows.len(), self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[(i, j)] = v;
            }
        }
        out
    }
}

pub fn parse_libsvm(path: impl AsRef<Path>) -> Result<SparseDataset> {
    let text = fs::read_to_string(path)?;
    parse_libsvm_str(&text)
}

pub fn parse_libsvm_str(text: &str) -> Result<SparseDataset> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut dim = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("invalid label {label_tok:?}")))?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("invalid feature index {idx:?}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(err(format!("feature index {idx} not ascending after {last}")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("invalid feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value {val}")));
            }
            last = idx;
            row.push((idx - 1, val));
        }
        dim = dim.max(last);
        labels.push(label);
        rows.push(row);
    }
    Ok(SparseDataset { labels, rows, dim })
}
