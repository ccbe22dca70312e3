//! Procrustes disparity between two point configurations.

use nalgebra::DMatrix;

use super::encoding::EncodingMatrix;
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Centres the columns and scales to unit Frobenius norm.
fn standardize(m: &Matrix, which: &str) -> Result<DMatrix<f64>> {
    let (n, d) = (m.rows(), m.cols());
    let mut out = DMatrix::from_row_slice(n, d, m.as_slice());
    for j in 0..d {
        let mean = out.column(j).sum() / n as f64;
        out.column_mut(j).add_scalar_mut(-mean);
    }
    let norm = out.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate(format!("matrix {which} is constant")));
    }
    Ok(out / norm)
}

/// Minimum of `‖A′ − s·B′R‖²_F` over orthogonal `R` (reflections allowed)
/// and scale `s > 0`, where `A′`, `B′` are the column-centred inputs scaled
/// to unit Frobenius norm.
///
/// With `σ` the singular values of `A′ᵀB′`, the minimum is `1 − (Σσ)²`.
/// The result lies in `[0, 1]` and is symmetric in its arguments.
pub fn procrustes_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "procrustes needs equal shapes, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.rows() <= a.cols() {
        return Err(Error::Usage(format!(
            "procrustes needs more points ({}) than dimensions ({})",
            a.rows(),
            a.cols()
        )));
    }
    let a = standardize(a, "A")?;
    let b = standardize(b, "B")?;
    let cross = a.transpose() * b;
    let trace_norm: f64 = cross.singular_values().iter().sum();
    Ok((1.0 - trace_norm * trace_norm).max(0.0))
}

/// Procrustes disparity between two models' encodings of the same rows.
pub fn encoding_distance(a: &EncodingMatrix, b: &EncodingMatrix) -> Result<f64> {
    if a.time_indices() != b.time_indices() {
        return Err(Error::Usage(
            "encodings cover different time indices; compare encodings of the same test set".into(),
        ));
    }
    if a.dim() != b.dim() {
        return Err(Error::Usage(format!(
            "latent dimensions differ ({} vs {})",
            a.dim(),
            b.dim()
        )));
    }
    procrustes_distance(a.z(), b.z())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = m(&[[0.0, 0.0], [1.0, 0.3], [0.2, 1.0], [2.0, -1.0]]);
        assert!(procrustes_distance(&a, &a).unwrap() < 1e-15);
    }

    #[test]
    fn reflection_is_free() {
        let a = m(&[[0.0, 0.0], [1.0, 0.3], [0.2, 1.0], [2.0, -1.0]]);
        let b = m(&[[0.0, 0.0], [-1.0, 0.3], [-0.2, 1.0], [-2.0, -1.0]]);
        assert!(procrustes_distance(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn errors() {
        let a = m(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]);
        let c = m(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(procrustes_distance(&a, &c), Err(Error::Degenerate(_))));
        let short = m(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(procrustes_distance(&short, &short).is_err());
        let other = Matrix::zeros(4, 2);
        assert!(matches!(procrustes_distance(&a, &other), Err(Error::Shape(_))));
    }

    #[test]
    fn encoding_indices_must_match() {
        let a = EncodingMatrix::new(m(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]), vec![0, 1, 2], "a").unwrap();
        let b = EncodingMatrix::new(m(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]), vec![1, 2, 3], "b").unwrap();
        assert!(matches!(encoding_distance(&a, &b), Err(Error::Usage(_))));
        assert!(encoding_distance(&a, &a).unwrap() < 1e-15);
    }
}
