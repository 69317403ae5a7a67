//! Gaussian and linear kernel Gram matrices.
//!
//! The Gaussian Gram matrix of samples x_1..x_n has entries
//! exp(-||x_i - x_j||^2 / c_d) with bandwidth c_d = gamma * d. Entries are
//! computed once per unordered pair and mirrored, so symmetry is exact and
//! the diagonal is exactly 1.

use crate::error::{Error, Result};
use crate::mat::{compensated_dot, squared_distance, DataMatrix, Matrix};
use crate::scalar::Scalar;

/// Bandwidth scaling rule c_d = gamma * d.
///
/// Fixing the ratio exactly (rather than only in the d -> infinity limit)
/// removes scaling drift from finite-d experiments.
#[derive(Clone, Copy, Debug)]
pub struct ScalingRule<T> {
    gamma: T,
}

impl<T: Scalar> ScalingRule<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma.is_finite() && gamma > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "gamma must be a positive finite real, got {gamma}"
            )));
        }
        Ok(ScalingRule { gamma })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }
}

/// Bandwidth for dimension d: c_d = gamma * d.
pub fn scaling_parameter<T: Scalar>(rule: &ScalingRule<T>, d: usize) -> T {
    rule.gamma * T::from_usize_exact(d)
}

/// Symmetric Gram matrix with unit diagonal.
///
/// Invariants held by construction: exact symmetry (each pair computed once
/// and mirrored), diagonal exactly 1, finite entries. Gram matrices built by
/// [`gaussian_gram`] and [`hadamard`] additionally have entries in [0, 1]
/// (strictly positive unless the kernel underflows); debiased estimates may
/// slightly exceed 1 at finite d and skip the range check.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix<T> {
    inner: Matrix<T>,
}

impl<T: Scalar> KernelMatrix<T> {
    /// Validating constructor: exact symmetry, unit diagonal, entries in [0, 1].
    pub fn new(inner: Matrix<T>) -> Result<Self> {
        Self::check_shape(&inner)?;
        for i in 0..inner.rows() {
            for j in 0..inner.cols() {
                let v = inner[(i, j)];
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(Error::InvalidInput(format!(
                        "kernel entry ({i},{j}) = {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(KernelMatrix { inner })
    }

    /// Constructor for debiased estimates: exact symmetry and unit diagonal
    /// are still required, but entries may exceed 1 (finite-d rescaling can
    /// push off-diagonal entries slightly out of range).
    pub(crate) fn new_debiased(inner: Matrix<T>) -> Result<Self> {
        Self::check_shape(&inner)?;
        Ok(KernelMatrix { inner })
    }

    fn check_shape(inner: &Matrix<T>) -> Result<()> {
        if !inner.is_square() {
            return Err(Error::DimensionMismatch {
                context: "kernel matrix must be square",
                expected: inner.rows(),
                found: inner.cols(),
            });
        }
        if !inner.all_finite() {
            return Err(Error::InvalidInput(
                "kernel matrix contains non-finite entries".into(),
            ));
        }
        for i in 0..inner.rows() {
            if inner[(i, i)] != T::one() {
                return Err(Error::InvalidInput(format!(
                    "kernel diagonal entry ({i},{i}) = {} must be exactly 1",
                    inner[(i, i)]
                )));
            }
            for j in (i + 1)..inner.cols() {
                if inner[(i, j)] != inner[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "kernel matrix asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.inner[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }
}

/// Build a symmetric unit-diagonal matrix from a per-pair kernel evaluation,
/// computing each unordered pair once and mirroring.
fn build_mirrored<T: Scalar>(n: usize, mut pair: impl FnMut(usize, usize) -> T) -> Matrix<T> {
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = pair(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Gaussian kernel Gram matrix: entries exp(-||x_i - x_j||^2 / c_d).
pub fn gaussian_gram<T: Scalar>(data: &DataMatrix<T>, c_d: T) -> Result<KernelMatrix<T>> {
    if !(c_d.is_finite() && c_d > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "bandwidth c_d must be positive and finite, got {c_d}"
        )));
    }
    let m = build_mirrored(data.n(), |i, j| {
        (-squared_distance(data.row(i), data.row(j)) / c_d).exp()
    });
    KernelMatrix::new(m)
}

/// Linear kernel Gram matrix: entries x_i . x_j (not normalized; callers
/// working in the high-dimensional limit scale by 1/d).
pub fn linear_gram<T: Scalar>(data: &DataMatrix<T>) -> Result<Matrix<T>> {
    let n = data.n();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = compensated_dot(data.row(i), data.row(i));
        for j in (i + 1)..n {
            let v = compensated_dot(data.row(i), data.row(j));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Hadamard (entrywise) product of two kernel matrices of equal order.
pub fn hadamard<T: Scalar>(a: &KernelMatrix<T>, b: &KernelMatrix<T>) -> Result<KernelMatrix<T>> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            context: "hadamard operands",
            expected: a.n(),
            found: b.n(),
        });
    }
    let m = build_mirrored(a.n(), |i, j| a.entry(i, j) * b.entry(i, j));
    KernelMatrix::new(m)
}
