//! Dense square matrices and the LU-backed Leontief solves.
//!
//! Storage is row-major. Factorization is delegated to `faer`'s
//! partial-pivot LU; inverses are never formed.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::error::{Error, Result};

/// Row-major `n x n` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareMatrix { n, data }
    }

    /// Builds a matrix from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::param(
                "matrix",
                format!("expected {} entries for {n}x{n}, got {}", n * n, data.len()),
            ));
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::param(
                    "matrix",
                    format!("row {i} has {} entries, expected {n}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for (acc, v) in out.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        SquareMatrix::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^T * x`.
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, xi) in x.iter().enumerate() {
            for (acc, a) in out.iter_mut().zip(self.row(i)) {
                *acc += a * xi;
            }
        }
        out
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

/// Partial-pivot LU of a square matrix, usable for `M x = b` and `M^T x = b`.
pub struct LuFactors {
    lu: PartialPivLu<f64>,
    n: usize,
}

impl LuFactors {
    pub fn new(m: &SquareMatrix) -> Self {
        let mat = Mat::<f64>::from_fn(m.n, m.n, |i, j| m.get(i, j));
        LuFactors {
            lu: mat.partial_piv_lu(),
            n: m.n,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve_transpose(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Largest absolute entry and its index.
pub(crate) fn max_abs(v: &[f64]) -> (usize, f64) {
    v.iter()
        .map(|x| x.abs())
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, x)| {
            // NaN wins so that a broken solve is always reported
            if x > bv || x.is_nan() && !bv.is_nan() {
                (i, x)
            } else {
                (bi, bv)
            }
        })
}

/// Solves `(I - m) x = 1` and checks `||(I - m) x - 1||_inf <= tol`.
///
/// Row sums of `m` must be strictly below one; the first offending row is
/// reported otherwise.
pub fn solve_leontief(m: &SquareMatrix, tol: f64) -> Result<Vec<f64>> {
    for (row, sum) in m.row_sums().into_iter().enumerate() {
        if !(sum < 1.0) {
            return Err(Error::NotSubstochastic { row, sum });
        }
    }
    let n = m.dim();
    let i_minus_m = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0 - m.get(i, j)
        } else {
            -m.get(i, j)
        }
    });
    let ones = vec![1.0; n];
    let x = LuFactors::new(&i_minus_m).solve(&ones);
    let r: Vec<f64> = i_minus_m
        .mul_vec(&x)
        .into_iter()
        .map(|v| v - 1.0)
        .collect();
    let (row, residual) = max_abs(&r);
    if !(residual <= tol) {
        return Err(Error::Singular { row, residual });
    }
    Ok(x)
}
