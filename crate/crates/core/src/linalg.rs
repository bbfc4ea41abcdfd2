//! Small dense matrices over any [`Real`] scalar.
//!
//! Decompositions that only ever run on plain `f64` (SVD, symmetric
//! eigenproblems, Cholesky) go through `nalgebra`; the routines here are the
//! ones that must also propagate dual numbers.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular or too ill-conditioned to invert")]
    Singular,
    #[error("matrix sign iteration did not converge")]
    NoConvergence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(n: usize, cols: &[Vec<T>]) -> Self {
        Self::from_fn(n, cols.len(), |i, j| cols[j][i])
    }

    pub fn lift_f64(m: &Mat<f64>) -> Self {
        Self::from_fn(m.rows, m.cols, |i, j| T::from_f64(m[(i, j)]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn values(&self) -> Mat<f64> {
        self.map(|v| v.value())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "matrix shape mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if is_exact_zero(a) {
                    continue;
                }
                for j in 0..o.cols {
                    out[(i, j)] = out[(i, j)] + a * o[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..self.cols {
                    acc = acc + self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + o[(i, j)])
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - o[(i, j)])
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Gauss-Jordan inverse with partial pivoting on primal values.
    pub fn inverse(&self) -> Result<Self, LinalgError> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.data.iter().map(|v| v.value().abs()).fold(0.0f64, f64::max);
        if scale == 0.0 {
            return Err(LinalgError::Singular);
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r1, &r2| a[(r1, col)].value().abs().total_cmp(&a[(r2, col)].value().abs()))
                .unwrap();
            if a[(pivot, col)].value().abs() <= 1e-14 * scale {
                return Err(LinalgError::Singular);
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let d = T::one() / a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] * d;
                inv[(col, j)] = inv[(col, j)] * d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if is_exact_zero(f) {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] = a[(r, j)] - f * a[(col, j)];
                    inv[(r, j)] = inv[(r, j)] - f * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        for j in 0..self.cols {
            self.data.swap(r1 * self.cols + j, r2 * self.cols + j);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.value().abs()).fold(0.0, f64::max)
    }
}

fn is_exact_zero<T: Real>(v: T) -> bool {
    v.is_zero()
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix sign function by the Newton iteration `X <- (X + X^-1) / 2`.
///
/// Converges for any matrix with real spectrum bounded away from zero, and
/// the infinitesimal parts of dual inputs converge to the derivative of the
/// sign function.
pub fn matrix_sign<T: Real>(m: &Mat<T>) -> Result<Mat<T>, LinalgError> {
    let half = T::from_f64(0.5);
    let mut x = m.clone();
    let mut settled = 0;
    for _ in 0..100 {
        let next = x.add(&x.inverse()?).scale(half);
        let change = next.sub(&x).max_abs();
        x = next;
        if change < 1e-15 * x.max_abs().max(1.0) {
            settled += 1;
            // a few extra sweeps let derivative parts settle as well
            if settled >= 3 {
                return Ok(x);
            }
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Spectral projector onto the eigenvalues of `s` that exceed `threshold`.
pub fn projector_above<T: Real>(s: &Mat<T>, threshold: f64) -> Result<Mat<T>, LinalgError> {
    let n = s.rows();
    let shifted = s.sub(&Mat::identity(n).scale(T::from_f64(threshold)));
    let sign = matrix_sign(&shifted)?;
    Ok(Mat::identity(n).add(&sign).scale(T::from_f64(0.5)))
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn axpy<T: Real>(a: T, x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(&xi, &yi)| a * xi + yi).collect()
}

pub fn vsub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn vadd<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn vscale<T: Real>(s: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| s * x).collect()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Bilinear form `a^T G b`.
pub fn inner<T: Real>(g: &Mat<T>, a: &[T], b: &[T]) -> T {
    dot(a, &g.mul_vec(b))
}

pub fn to_nalgebra(m: &Mat<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Dual;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!(id.sub(&Mat::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(m.inverse(), Err(LinalgError::Singular));
    }

    #[test]
    fn sign_projector_of_diagonal() {
        let s = Mat::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.25, 0.0], vec![0.0, 0.0, 0.0]]);
        let p = projector_above(&s, 0.6).unwrap();
        let want = Mat::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]);
        assert!(p.sub(&want).max_abs() < 1e-14);
    }

    #[test]
    fn sign_projector_derivative_matches_difference_quotient() {
        // S(t) = R(t) diag(1, 0.3) R(t)^T, projector onto the top eigenvector
        let build = |t: f64| {
            let (s, c) = t.sin_cos();
            let r = Mat::from_rows(&[vec![c, -s], vec![s, c]]);
            let d = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.3]]);
            r.mul(&d).mul(&r.transpose())
        };
        let t0: f64 = 0.4;
        let (s, c) = t0.sin_cos();
        let r = Mat::from_rows(&[
            vec![Dual::new(c, -s), Dual::new(-s, -c)],
            vec![Dual::new(s, c), Dual::new(c, -s)],
        ]);
        let d = Mat::from_rows(&[
            vec![Dual::from_f64(1.0), Dual::from_f64(0.0)],
            vec![Dual::from_f64(0.0), Dual::from_f64(0.3)],
        ]);
        let sd = r.mul(&d).mul(&r.transpose());
        let p = projector_above(&sd, 0.65).unwrap();
        let h = 1e-6;
        let pp = projector_above(&build(t0 + h), 0.65).unwrap();
        let pm = projector_above(&build(t0 - h), 0.65).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let fd = (pp[(i, j)] - pm[(i, j)]) / (2.0 * h);
                assert!((p[(i, j)].eps - fd).abs() < 1e-8);
            }
        }
    }
}
