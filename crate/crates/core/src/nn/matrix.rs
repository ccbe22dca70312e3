//! Dense row-major `f64` matrices and the handful of products the MLP needs.
//!
//! Every product accumulates each output element in ascending index order, so
//! results are bitwise reproducible for identical inputs. The inner loops are
//! written as row axpys, which the compiler vectorizes across the output row
//! without reassociating any single element's sum.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// Gathers the listed rows into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.map_inplace(|v| v * c);
    }
}

/// `C = init + A · B`, `init` broadcast over rows.
///
/// Two rows by eight columns of `C` are accumulated in registers at a time.
/// Each element is still summed over `k` in ascending order starting from
/// its `init` value, so neither the blocking nor the instruction set changes
/// any result: the AVX2 build only widens the same multiplies and adds, and
/// nothing is fused.
pub(crate) fn gemm(a: &Matrix, b: &Matrix, init: Option<&[f64]>) -> Matrix {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            return unsafe { gemm_avx2(a, b, init) };
        }
    }
    gemm_kernel(a, b, init)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn gemm_avx2(a: &Matrix, b: &Matrix, init: Option<&[f64]>) -> Matrix {
    gemm_kernel(a, b, init)
}

#[inline(always)]
fn gemm_kernel(a: &Matrix, b: &Matrix, init: Option<&[f64]>) -> Matrix {
    const NB: usize = 8;
    let (m, kd, n) = (a.rows, a.cols, b.cols);
    debug_assert_eq!(kd, b.rows);
    let mut c = Matrix::zeros(m, n);
    let bd = &b.data;
    let mut i = 0;
    while i < m {
        let pair = i + 1 < m;
        let a0 = a.row(i);
        let a1 = if pair { a.row(i + 1) } else { a0 };
        let mut j = 0;
        while j < n {
            let w = NB.min(n - j);
            let mut acc0 = [0.0; NB];
            if let Some(init) = init {
                acc0[..w].copy_from_slice(&init[j..j + w]);
            }
            let mut acc1 = acc0;
            if w == NB {
                for k in 0..kd {
                    let brow: &[f64; NB] = bd[k * n + j..k * n + j + NB].try_into().expect("block");
                    let (x0, x1) = (a0[k], a1[k]);
                    for t in 0..NB {
                        acc0[t] += x0 * brow[t];
                        acc1[t] += x1 * brow[t];
                    }
                }
            } else {
                for k in 0..kd {
                    let brow = &bd[k * n + j..k * n + j + w];
                    let (x0, x1) = (a0[k], a1[k]);
                    for t in 0..w {
                        acc0[t] += x0 * brow[t];
                        acc1[t] += x1 * brow[t];
                    }
                }
            }
            c.data[i * n + j..i * n + j + w].copy_from_slice(&acc0[..w]);
            if pair {
                c.data[(i + 1) * n + j..(i + 1) * n + j + w].copy_from_slice(&acc1[..w]);
            }
            j += NB;
        }
        i += 2;
    }
    c
}

/// `C = A · B` for `A: m×k`, `B: k×n`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(gemm(a, b, None))
}

/// `C = Aᵀ · B` for `A: k×m`, `B: k×n`.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::Shape(format!(
            "cannot multiply ({}x{})ᵀ by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(gemm(&a.transpose(), b, None))
}
