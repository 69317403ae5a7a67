//! Symmetric eigendecomposition, block partitioning, Schur-complement
//! elimination, and the constrained low-rank perturbation of the trailing
//! block.
//!
//! Matrix orders here are the sample counts (a few dozen at most), so a
//! cyclic Jacobi sweep is plenty: it is backward stable, keeps eigenvector
//! orthonormality at machine precision, and needs no external solver.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::mat::{compensated_dot, Matrix};
use crate::scalar::Scalar;

const MAX_JACOBI_SWEEPS: usize = 64;

/// Entrywise symmetry tolerance required of eigensolver inputs.
const SYMMETRY_TOL: f64 = 1e-12;

/// Full symmetric eigendecomposition with ascending eigenvalues and
/// orthonormal column eigenvectors aligned to them.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Column eigenvector for the i-th (ascending) eigenvalue.
    pub fn eigenvector(&self, i: usize) -> Matrix<T> {
        self.vectors.block(0, self.vectors.rows(), i, i + 1)
    }

    /// Eigenvectors for a contiguous cluster of eigenvalue indices, as an
    /// n x |cluster| matrix with orthonormal columns.
    pub fn eigenvectors(&self, cluster: Range<usize>) -> Matrix<T> {
        self.vectors
            .block(0, self.vectors.rows(), cluster.start, cluster.end)
    }

    /// Solve A X = B through the spectral factorization A = V diag(w) V^T.
    pub fn solve(&self, rhs: &Matrix<T>) -> Matrix<T> {
        let vt_b = self.vectors.transpose().matmul(rhs);
        let scaled = Matrix::from_fn(vt_b.rows(), vt_b.cols(), |i, j| vt_b[(i, j)] / self.values[i]);
        self.vectors.matmul(&scaled)
    }

    /// Condition number estimate |w|_max / |w|_min; infinite when singular.
    pub fn condition_number(&self) -> T {
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for &v in &self.values {
            lo = lo.min(v.abs());
            hi = hi.max(v.abs());
        }
        if lo == T::zero() {
            T::infinity()
        } else {
            hi / lo
        }
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Input must be symmetric within 1e-12 entrywise; the iteration works on
/// the exactly symmetrized copy.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> Result<EigenDecomposition<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "eigensolver input must be square",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    if !a.all_finite() {
        return Err(Error::InvalidInput(
            "eigensolver input contains non-finite entries".into(),
        ));
    }
    if !a.is_symmetric_within(T::from_f64_const(SYMMETRY_TOL)) {
        return Err(Error::InvalidInput(
            "eigensolver input is not symmetric within 1e-12".into(),
        ));
    }

    let n = a.rows();
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);

    if n > 1 {
        let scale = m.frobenius_norm();
        let stop = scale * T::epsilon() * T::from_usize_exact(n);
        for _sweep in 0..MAX_JACOBI_SWEEPS {
            if off_diagonal_norm(&m) <= stop {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    jacobi_rotate(&mut m, &mut v, p, q);
                }
            }
        }
        // quadratic convergence makes this unreachable for sane inputs, but
        // a silent partial decomposition would violate the residual bound
        if off_diagonal_norm(&m) > scale * T::from_f64_const(1e-10) {
            return Err(Error::InvalidInput(format!(
                "Jacobi sweep did not converge within {MAX_JACOBI_SWEEPS} sweeps"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .partial_cmp(&m[(j, j)])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors })
}

fn off_diagonal_norm<T: Scalar>(m: &Matrix<T>) -> T {
    let mut s = T::zero();
    for i in 0..m.rows() {
        for j in (i + 1)..m.cols() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    (s + s).sqrt()
}

/// One Jacobi rotation zeroing m[p][q], accumulated into v's columns.
fn jacobi_rotate<T: Scalar>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == T::zero() {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (apq + apq);
    let t = {
        let abs_theta = theta.abs();
        let root = (T::one() + theta * theta).sqrt();
        let t = T::one() / (abs_theta + root);
        if theta < T::zero() {
            -t
        } else {
            t
        }
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    let n = m.rows();
    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = T::zero();
    m[(q, p)] = T::zero();
    for k in 0..n {
        if k != p && k != q {
            let akp = m[(k, p)];
            let akq = m[(k, q)];
            m[(k, p)] = c * akp - s * akq;
            m[(p, k)] = m[(k, p)];
            m[(k, q)] = s * akp + c * akq;
            m[(q, k)] = m[(k, q)];
        }
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Smallest (algebraic) eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    Ok(sym_eigen(a)?.values[0])
}

/// Singular values of a rectangular matrix by one-sided Jacobi, descending.
///
/// Orthogonalizes column pairs of the (tall) matrix; singular values are the
/// resulting column norms. Accurate for the small Gram-like blocks used in
/// principal-angle computations.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    let mut a = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let (rows, cols) = (a.rows(), a.cols());
    if cols == 0 {
        return Vec::new();
    }
    let eps = T::epsilon() * T::from_f64_const(4.0);
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in p + 1..cols {
                let (mut app, mut aqq, mut apq) = (T::zero(), T::zero(), T::zero());
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == T::zero() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (apq + apq);
                let t = {
                    let root = (T::one() + tau * tau).sqrt();
                    let t = T::one() / (tau.abs() + root);
                    if tau < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..cols)
        .map(|j| {
            let col = a.column(j);
            compensated_dot(&col, &col).sqrt()
        })
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    sv
}

/// Kernel matrix split at a clean prefix of size ell: blocks K11 (ell x ell),
/// K12 (ell x m), K21 (m x ell), K22 (m x m) with ell + m = n.
#[derive(Clone, Copy, Debug)]
pub struct PartitionedKernel<'a, T> {
    base: &'a KernelMatrix<T>,
    ell: usize,
}

impl<'a, T: Scalar> PartitionedKernel<'a, T> {
    pub fn new(base: &'a KernelMatrix<T>, ell: usize) -> Result<Self> {
        let n = base.n();
        if ell < 1 || ell > n.saturating_sub(1) {
            return Err(Error::Config(format!(
                "clean prefix ell = {ell} must satisfy 1 <= ell <= n-1 (n = {n})"
            )));
        }
        Ok(PartitionedKernel { base, ell })
    }

    pub fn base(&self) -> &KernelMatrix<T> {
        self.base
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn m(&self) -> usize {
        self.base.n() - self.ell
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn k11(&self) -> Matrix<T> {
        self.base.matrix().block(0, self.ell, 0, self.ell)
    }

    pub fn k12(&self) -> Matrix<T> {
        self.base.matrix().block(0, self.ell, self.ell, self.n())
    }

    pub fn k21(&self) -> Matrix<T> {
        self.base.matrix().block(self.ell, self.n(), 0, self.ell)
    }

    pub fn k22(&self) -> Matrix<T> {
        self.base
            .matrix()
            .block(self.ell, self.n(), self.ell, self.n())
    }
}

/// Schur complement K22 - K21 K11^-1 K12 of the clean block.
///
/// K11 must be well conditioned: its condition number (from the spectral
/// factorization used for the solve) must not exceed `cond_threshold`.
/// The result is symmetrized by averaging with its transpose.
pub fn schur_complement<T: Scalar>(
    p: &PartitionedKernel<'_, T>,
    cond_threshold: T,
) -> Result<Matrix<T>> {
    if !(cond_threshold.is_finite() && cond_threshold > T::zero()) {
        return Err(Error::InvalidInput(
            "condition threshold must be positive and finite".into(),
        ));
    }
    let k11 = p.k11();
    let eig = sym_eigen(&k11)?;
    let cond = eig.condition_number();
    if cond > cond_threshold {
        return Err(Error::IllConditioned {
            block: "K11",
            cond: cond.as_f64(),
            threshold: cond_threshold.as_f64(),
        });
    }
    let x = eig.solve(&p.k12());
    let s = p.k22().sub(&p.k21().matmul(&x));
    Ok(s.symmetrize())
}

/// Minimal-Frobenius-norm symmetric perturbation of the trailing block that
/// makes the full partitioned matrix rank deficient.
#[derive(Clone, Debug)]
pub struct LowRankPerturbation<T> {
    /// Symmetric m x m perturbation Delta = -theta u u^T.
    pub delta: Matrix<T>,
    /// Frobenius norm of delta, equal to |theta|.
    pub norm: T,
}

/// Solve min ||Delta||_F subject to rank([K11 K12; K21 K22 + Delta]) <= n-1.
///
/// With K11 nonsingular the constraint is equivalent to rank(S + Delta) <=
/// m-1 for the Schur complement S, and the optimum drops the eigenvalue of S
/// with smallest absolute value: Delta = -theta u u^T with norm |theta|.
pub fn constrained_lowrank_delta<T: Scalar>(
    p: &PartitionedKernel<'_, T>,
    cond_threshold: T,
) -> Result<LowRankPerturbation<T>> {
    let s = schur_complement(p, cond_threshold)?;
    let eig = sym_eigen(&s)?;
    let mut k_min = 0;
    for (k, v) in eig.values.iter().enumerate() {
        if v.abs() < eig.values[k_min].abs() {
            k_min = k;
        }
    }
    let theta = eig.values[k_min];
    let u = eig.eigenvector(k_min);
    let m = s.rows();
    let mut delta = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = -theta * u[(i, 0)] * u[(j, 0)];
            delta[(i, j)] = v;
            delta[(j, i)] = v;
        }
    }
    Ok(LowRankPerturbation {
        delta,
        norm: theta.abs(),
    })
}

/// Largest principal angle (radians) between the column spans of two
/// orthonormal matrices.
///
/// Cosines of the principal angles are the singular values of u^T v. Near
/// zero angle the arccosine of a value rounded to 1 cannot resolve below
/// ~sqrt(eps), so for equal-dimension subspaces with cos^2 > 1/2 the angle
/// is recovered from the sine instead: the largest singular value of
/// v - u (u^T v).
pub fn subspace_angle<T: Scalar>(u: &Matrix<T>, v: &Matrix<T>) -> Result<T> {
    if u.rows() != v.rows() {
        return Err(Error::DimensionMismatch {
            context: "subspace bases must share row count",
            expected: u.rows(),
            found: v.rows(),
        });
    }
    check_orthonormal(u, "first")?;
    check_orthonormal(v, "second")?;

    let m = u.transpose().matmul(v);
    let sv = singular_values(&m);
    let k = u.cols().min(v.cols());
    let cos_max_angle = sv
        .get(k - 1)
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero())
        .min(T::one());

    let half = T::from_f64_const(0.5);
    if u.cols() == v.cols() && cos_max_angle * cos_max_angle > half {
        let residual = v.sub(&u.matmul(&m));
        let s = singular_values(&residual)
            .first()
            .copied()
            .unwrap_or(T::zero())
            .min(T::one());
        Ok(s.asin())
    } else {
        Ok(cos_max_angle.acos())
    }
}

fn check_orthonormal<T: Scalar>(u: &Matrix<T>, which: &str) -> Result<()> {
    if u.cols() == 0 || u.cols() > u.rows() {
        return Err(Error::InvalidInput(format!(
            "{which} basis must have between 1 and {} columns, got {}",
            u.rows(),
            u.cols()
        )));
    }
    let gram = u.transpose().matmul(u);
    let dev = gram.max_abs_diff(&Matrix::identity(u.cols()));
    if dev > T::from_f64_const(1e-8) {
        return Err(Error::InvalidInput(format!(
            "{which} basis is not orthonormal: Gram deviation {:e} exceeds 1e-8",
            dev.as_f64()
        )));
    }
    Ok(())
}

/// Group ascending eigenvalues into clusters separated by gaps larger than
/// `gap`. Returns index ranges into the sorted list.
pub fn eigenvalue_clusters<T: Scalar>(values: &[T], gap: T) -> Vec<Range<usize>> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            clusters.push(start..i);
            start = i;
        }
    }
    clusters
}
