use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Matrix, RngStream};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub name: String,
    pub noise_level: f64,
    pub seed: u64,
}

/// Time-ordered `N×D` feature matrix with optional per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    values: Matrix,
    labels: Option<Vec<i64>>,
    pub meta: SeriesMeta,
}

impl SeriesMatrix {
    pub fn new(values: Matrix, labels: Option<Vec<i64>>, meta: SeriesMeta) -> Result<Self> {
        if values.rows() < 2 {
            return Err(Error::Data(format!(
                "series needs at least 2 rows, got {}",
                values.rows()
            )));
        }
        if let Some(row) = values.row_iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::Data(format!("row {row} contains a non-finite value")));
        }
        if let Some(l) = &labels {
            if l.len() != values.rows() {
                return Err(Error::Data(format!(
                    "{} labels for {} rows",
                    l.len(),
                    values.rows()
                )));
            }
        }
        Ok(SeriesMatrix {
            values,
            labels,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t)
    }

    /// Contiguous rows `range`, labels carried along.
    pub fn segment(&self, range: std::ops::Range<usize>) -> Result<SeriesMatrix> {
        let idx: Vec<usize> = range.clone().collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| l[range.clone()].to_vec());
        SeriesMatrix::new(self.values.select_rows(&idx), labels, self.meta.clone())
    }

    /// Row order used by [`SeriesMatrix::shuffled`]: entry `i` is the source
    /// row placed at position `i`.
    pub fn shuffle_order(&self, seed: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        RngStream::new(seed)
            .substream(crate::nn::Purpose::Shuffle, u64::MAX, 0)
            .shuffle(&mut order);
        order
    }

    /// Same rows in a seeded random order, which destroys temporal structure.
    pub fn shuffled(&self, seed: u64) -> SeriesMatrix {
        let order = self.shuffle_order(seed);
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&i| l[i]).collect());
        let mut meta = self.meta.clone();
        meta.name = format!("{}-shuffled", meta.name);
        SeriesMatrix {
            values: self.values.select_rows(&order),
            labels,
            meta,
        }
    }

    /// SHA-256 over the shape, value bits and labels.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        for v in self.values.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        match &self.labels {
            Some(l) => {
                h.update([1u8]);
                for v in l {
                    h.update(v.to_le_bytes());
                }
            }
            None => h.update([0u8]),
        }
        h.finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SeriesMatrix {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        SeriesMatrix::new(m, Some(vec![0, 0, 1]), SeriesMeta::default()).unwrap()
    }

    #[test]
    fn validation() {
        let one = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(SeriesMatrix::new(one, None, SeriesMeta::default()).is_err());
        let nan = Matrix::from_rows(&[vec![1.0], vec![f64::NAN]]).unwrap();
        assert!(SeriesMatrix::new(nan, None, SeriesMeta::default()).is_err());
        let m = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(SeriesMatrix::new(m, Some(vec![0]), SeriesMeta::default()).is_err());
    }

    #[test]
    fn segment_and_hash() {
        let s = tiny();
        let seg = s.segment(1..3).unwrap();
        assert_eq!(seg.row(0), &[2.0, 3.0]);
        assert_eq!(seg.labels(), Some(&[0, 1][..]));
        assert_eq!(s.content_hash(), tiny().content_hash());
        assert_ne!(s.content_hash(), seg.content_hash());
    }

    #[test]
    fn shuffle_keeps_rows_with_labels() {
        let s = tiny();
        let sh = s.shuffled(5);
        for t in 0..sh.len() {
            let src = (0..s.len()).find(|&i| s.row(i) == sh.row(t)).unwrap();
            assert_eq!(s.labels().unwrap()[src], sh.labels().unwrap()[t]);
        }
    }
}
