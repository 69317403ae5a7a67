//! Dense row-major matrices and compensated reductions.
//!
//! Everything here is sized for the small-n / large-d regime: Gram matrices
//! are at most a few dozen rows, while data rows run to 10^5-10^6 entries,
//! so the long reductions (dot products, squared distances) use Neumaier
//! compensated summation.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
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
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::InvalidInput("matrix rows must be nonempty".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                context: "ragged row",
                expected: cols,
                found: bad.len(),
            });
        }
        let n = rows.len();
        let data = rows.into_iter().flatten().collect();
        Ok(Matrix {
            rows: n,
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    /// Copy of the block with rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix<T> {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn frobenius_norm(&self) -> T {
        compensated_sum(self.data.iter().map(|&v| v * v)).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric_within(&self, tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// (A + A^T) / 2, exact on the diagonal.
    pub fn symmetrize(&self) -> Matrix<T> {
        assert!(self.is_square());
        let half = T::from_f64_const(0.5);
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            if i == j {
                self[(i, j)]
            } else {
                (self[(i, j)] + self[(j, i)]) * half
            }
        })
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6?} ", self.data[i * self.cols + j])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Neumaier (Kahan-Babuska) compensated sum.
pub fn compensated_sum<T: Scalar>(terms: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for term in terms {
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Compensated dot product of two equal-length slices.
pub fn compensated_dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(&x, &y)| x * y))
}

/// Compensated squared Euclidean distance, accumulated from explicit
/// coordinate differences. Expanding into norms and a cross term would
/// cancel catastrophically for near-duplicate rows, which the duplicated
/// signal scenarios produce on purpose.
pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(&x, &y)| {
        let diff = x - y;
        diff * diff
    }))
}

/// Data matrix: n sample vectors of dimension d, one per row, all finite.
#[derive(Clone, Debug)]
pub struct DataMatrix<T> {
    inner: Matrix<T>,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn new(inner: Matrix<T>) -> Result<Self> {
        if !inner.all_finite() {
            return Err(Error::InvalidInput(
                "data matrix contains non-finite entries".into(),
            ));
        }
        Ok(DataMatrix { inner })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        DataMatrix::new(Matrix::from_rows(rows)?)
    }

    /// Number of samples (rows).
    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    /// Ambient dimension (columns).
    pub fn dim(&self) -> usize {
        self.inner.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.inner.row(i)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.inner
    }
}
