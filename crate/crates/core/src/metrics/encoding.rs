use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Latent codes of a series, one row per assigned time index.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    z: Matrix,
    time_indices: Vec<i64>,
    pub source_model: String,
}

impl EncodingMatrix {
    pub fn new(z: Matrix, time_indices: Vec<i64>, source_model: impl Into<String>) -> Result<Self> {
        if z.rows() != time_indices.len() {
            return Err(Error::Shape(format!(
                "{} encoding rows but {} time indices",
                z.rows(),
                time_indices.len()
            )));
        }
        if !z.is_finite() {
            return Err(Error::Numeric("encoding contains non-finite values".into()));
        }
        if time_indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("encoding time indices must strictly increase".into()));
        }
        Ok(EncodingMatrix {
            z,
            time_indices,
            source_model: source_model.into(),
        })
    }

    /// Rows indexed `0..N`.
    pub fn sequential(z: Matrix) -> Result<Self> {
        let idx = (0..z.rows() as i64).collect();
        EncodingMatrix::new(z, idx, "")
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn time_indices(&self) -> &[i64] {
        &self.time_indices
    }

    pub fn len(&self) -> usize {
        self.z.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.z.cols()
    }

    /// Index pairs `(i, i + 1)` of rows whose time indices differ by exactly one.
    pub fn adjacent_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.time_indices
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] - w[0] == 1)
            .map(|(i, _)| (i, i + 1))
    }

    /// CSV with a `time_index` column followed by `z0..`; `labels` adds a
    /// trailing `label` column.
    pub fn to_csv(&self, labels: Option<&[i64]>) -> String {
        let mut out = String::from("time_index");
        for j in 0..self.dim() {
            out.push_str(&format!(",z{j}"));
        }
        if labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for (i, row) in self.z.row_iter().enumerate() {
            out.push_str(&self.time_indices[i].to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            if let Some(l) = labels {
                out.push(',');
                out.push_str(&l[i].to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Reads the [`to_csv`](Self::to_csv) layout. A trailing `label` column,
    /// when present, is returned separately.
    pub fn read_csv(path: &Path) -> Result<(EncodingMatrix, Option<Vec<i64>>)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ingest = |line: usize, msg: String| Error::Ingest {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| ingest(1, "empty file".into()))?
            .split(',')
            .map(str::trim)
            .collect();
        if header.first() != Some(&"time_index") {
            return Err(ingest(1, "first column must be `time_index`".into()));
        }
        let has_labels = header.last() == Some(&"label");
        let d = header.len() - 1 - usize::from(has_labels);
        let mut idx = Vec::new();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != header.len() {
                return Err(ingest(line_no, "ragged row".into()));
            }
            idx.push(
                cells[0]
                    .parse::<i64>()
                    .map_err(|_| ingest(line_no, format!("bad time index `{}`", cells[0])))?,
            );
            for c in &cells[1..=d] {
                let v: f64 = c
                    .parse()
                    .map_err(|_| ingest(line_no, format!("`{c}` is not a number")))?;
                if !v.is_finite() {
                    return Err(ingest(line_no, format!("non-finite value `{c}`")));
                }
                data.push(v);
            }
            if has_labels {
                labels.push(
                    cells[d + 1]
                        .parse::<i64>()
                        .map_err(|_| ingest(line_no, "bad label".into()))?,
                );
            }
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let enc = EncodingMatrix::new(Matrix::from_vec(idx.len(), d, data)?, idx, stem)?;
        Ok((enc, has_labels.then_some(labels)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_skips_gaps() {
        let z = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let e = EncodingMatrix::new(z, vec![0, 1, 3, 4], "m").unwrap();
        let pairs: Vec<_> = e.adjacent_pairs().collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn indices_must_increase() {
        let z = Matrix::zeros(2, 1);
        assert!(EncodingMatrix::new(z, vec![1, 1], "m").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let z = Matrix::from_rows(&[vec![0.1, -2.5], vec![1e-17, 3.0]]).unwrap();
        let e = EncodingMatrix::new(z, vec![4, 5], "m").unwrap();
        let p = dir.path().join("e.csv");
        fs::write(&p, e.to_csv(Some(&[7, 8]))).unwrap();
        let (back, labels) = EncodingMatrix::read_csv(&p).unwrap();
        assert_eq!(back.z(), e.z());
        assert_eq!(back.time_indices(), &[4, 5]);
        assert_eq!(labels, Some(vec![7, 8]));
    }
}
