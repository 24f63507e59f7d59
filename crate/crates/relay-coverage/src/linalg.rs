//! Small complex-matrix operations.
//!
//! Channel matrices here are at most 16x16, so everything is dense,
//! row-major, and allocation-light. Log-determinants of `I + X` with `X`
//! Hermitian positive semidefinite go through a Cholesky factorization that
//! accumulates log-pivots, which never overflows even when `det` itself
//! would.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// `self * self^H`, a `rows x rows` Hermitian Gram matrix.
    pub fn gram(&self) -> CMatrix {
        let n = self.rows;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.cols {
                    acc += self.get(i, k) * self.get(j, k).conj();
                }
                out.set(i, j, acc);
                out.set(j, i, acc.conj());
            }
        }
        out
    }

    /// `self^H * self`, a `cols x cols` Hermitian Gram matrix.
    pub fn gram_transposed(&self) -> CMatrix {
        let n = self.cols;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.rows {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                out.set(i, j, acc);
                out.set(j, i, acc.conj());
            }
        }
        out
    }

    /// Stack `top` over `bottom` (column counts must match).
    pub fn vstack(top: &CMatrix, bottom: &CMatrix) -> Result<CMatrix> {
        if top.cols != bottom.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} columns", top.cols),
                got: format!("{} columns", bottom.cols),
            });
        }
        let mut data = Vec::with_capacity((top.rows + bottom.rows) * top.cols);
        data.extend_from_slice(&top.data);
        data.extend_from_slice(&bottom.data);
        Ok(CMatrix {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        })
    }

    pub fn scaled(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Write `I + sum_k coeff_k * M_k` into `buf` (`n x n`, row-major).
/// Each `M_k` must be an `n x n` Hermitian matrix stored as a flat slice.
#[inline]
pub fn set_identity_plus_scaled(buf: &mut [Complex64], n: usize, terms: &[(f64, &[Complex64])]) {
    debug_assert_eq!(buf.len(), n * n);
    for (idx, slot) in buf.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(c, m) in terms {
            acc += c * m[idx];
        }
        *slot = acc;
    }
    for d in 0..n {
        buf[d * n + d] += 1.0;
    }
}

/// In-place Cholesky log-determinant of a Hermitian positive definite matrix
/// stored row-major in `buf`. Returns `log2 det`. The buffer is overwritten
/// with the lower triangular factor.
pub fn log2_det_hermitian_inplace(buf: &mut [Complex64], n: usize) -> Result<f64> {
    debug_assert_eq!(buf.len(), n * n);
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = buf[j * n + j].re;
        for k in 0..j {
            d -= buf[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NumericalInstability(format!(
                "Cholesky pivot {d} at column {j} of {n}x{n} matrix"
            )));
        }
        let l_jj = d.sqrt();
        log_det += d.ln();
        buf[j * n + j] = Complex64::new(l_jj, 0.0);
        for i in (j + 1)..n {
            let mut acc = buf[i * n + j];
            for k in 0..j {
                acc -= buf[i * n + k] * buf[j * n + k].conj();
            }
            buf[i * n + j] = acc / l_jj;
        }
    }
    Ok(log_det / std::f64::consts::LN_2)
}

/// `log2 det(I + X)` for Hermitian positive semidefinite `X`.
pub fn log2_det_identity_plus(x: &CMatrix) -> Result<f64> {
    if x.rows != x.cols {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", x.rows, x.cols),
        });
    }
    let n = x.rows;
    let mut buf = x.data.clone();
    for d in 0..n {
        buf[d * n + d] += 1.0;
    }
    log2_det_hermitian_inplace(&mut buf, n)
}
