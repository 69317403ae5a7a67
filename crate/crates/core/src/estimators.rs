//! Consistent estimators of the noise-free limit kernel.
//!
//! Both estimators exploit rank deficiency of the limit kernel: the noise
//! shrinks off-diagonal entries by a common factor, and when the noise-free
//! limit is singular that factor shows up as the smallest eigenvalue of the
//! observed kernel (fully noisy data) or of the Schur complement after
//! eliminating the clean block (partially noisy data). Dividing it back out
//! restores the limit kernel.

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::mat::Matrix;
use crate::scalar::Scalar;
use crate::spectral::{schur_complement, smallest_eigenvalue, PartitionedKernel};

/// Guard on 1 - lambda_1 (resp. 1 - tau_1) before division: closer to 1
/// than this and the kernel is indistinguishable from the identity.
pub const DEBIAS_EPSILON: f64 = 1e-6;

/// Negative Schur eigenvalues beyond this are a model violation rather than
/// roundoff.
const SCHUR_NEGATIVE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMode {
    FullNoise,
    PartialNoise,
    Oracle,
}

/// Debiased kernel estimate.
#[derive(Clone, Debug)]
pub struct EstimateResult<T> {
    /// The debiased kernel. Symmetric with unit diagonal; finite-d rescaling
    /// can leave it slightly indefinite or push entries marginally above 1,
    /// which is reported (see `min_eigenvalue`) rather than projected away.
    pub estimate: KernelMatrix<T>,
    /// The smallest eigenvalue used for debiasing (lambda_1 or tau_1, or the
    /// implied value for the oracle).
    pub debias_eigenvalue: T,
    /// Implied noise level, when the bandwidth ratio gamma is known to the
    /// estimator (only the oracle carries it; use
    /// [`noise_level_from_lambda`] otherwise).
    pub implied_noise: Option<T>,
    pub mode: EstimateMode,
}

impl<T: Scalar> EstimateResult<T> {
    /// Smallest eigenvalue of the estimate (PSD diagnostic).
    pub fn min_eigenvalue(&self) -> Result<T> {
        smallest_eigenvalue(self.estimate.matrix())
    }
}

fn check_debias_defined<T: Scalar>(value: T) -> Result<()> {
    if value >= T::one() - T::from_f64_const(DEBIAS_EPSILON) {
        return Err(Error::DebiasUndefined {
            eigenvalue: value.as_f64(),
            epsilon: DEBIAS_EPSILON,
        });
    }
    Ok(())
}

/// Full-noise estimator: K~ = (1 - lambda_1)^-1 (K - I) + I, where lambda_1
/// is the smallest eigenvalue of K.
///
/// The affine map fixes the diagonal at 1, shifts the whole spectrum so the
/// smallest eigenvalue of K~ is 0, and leaves eigenvectors unchanged.
pub fn estimate_full_noise<T: Scalar>(k: &KernelMatrix<T>) -> Result<EstimateResult<T>> {
    let lambda1 = smallest_eigenvalue(k.matrix())?;
    check_debias_defined(lambda1)?;
    let scale = T::one() / (T::one() - lambda1);
    let n = k.n();
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = k.entry(i, j) * scale;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(EstimateResult {
        estimate: KernelMatrix::new_debiased(m)?,
        debias_eigenvalue: lambda1,
        implied_noise: None,
        mode: EstimateMode::FullNoise,
    })
}

/// Partial-noise estimator for a kernel with clean prefix ell:
/// K~11 = K11, K~12 = (1 - tau_1)^-1/2 K12, K~22 = (1 - tau_1)^-1 (K22 - I) + I,
/// where tau_1 is the smallest eigenvalue of the Schur complement
/// K22 - K21 K11^-1 K12.
pub fn estimate_partial_noise<T: Scalar>(
    p: &PartitionedKernel<'_, T>,
    cond_threshold: T,
) -> Result<EstimateResult<T>> {
    let s = schur_complement(p, cond_threshold)?;
    let tau1_raw = smallest_eigenvalue(&s)?;
    // Spectral roundoff on a PSD Schur complement can leave tau_1 a hair
    // negative; clamp that band to 0 and reject anything materially below.
    if tau1_raw < -T::from_f64_const(SCHUR_NEGATIVE_TOL) {
        return Err(Error::SchurIndefinite {
            eigenvalue: tau1_raw.as_f64(),
        });
    }
    let tau1 = tau1_raw.max(T::zero());
    check_debias_defined(tau1)?;

    let r = T::one() / (T::one() - tau1);
    let r_half = r.sqrt();
    let (n, ell) = (p.n(), p.ell());
    let base = p.base();
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let factor = if j < ell {
                T::one() // clean block kept verbatim
            } else if i < ell {
                r_half // clean-noisy cross block
            } else {
                r // noisy block
            };
            let v = base.entry(i, j) * factor;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(EstimateResult {
        estimate: KernelMatrix::new_debiased(m)?,
        debias_eigenvalue: tau1,
        implied_noise: None,
        mode: EstimateMode::PartialNoise,
    })
}

/// Oracle baseline for known noise level: K~ = e^{2 sigma^2 / gamma} (K - I) + I.
///
/// Inverts the off-diagonal shrinkage directly; needs no rank-deficiency
/// assumption.
pub fn oracle_debias<T: Scalar>(
    k: &KernelMatrix<T>,
    sigma_bar_sq: T,
    gamma: T,
) -> Result<EstimateResult<T>> {
    if !(gamma.is_finite() && gamma > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(sigma_bar_sq.is_finite() && sigma_bar_sq >= T::zero()) {
        return Err(Error::InvalidInput(format!(
            "sigma_bar_sq must be nonnegative, got {sigma_bar_sq}"
        )));
    }
    let two = T::from_f64_const(2.0);
    let factor = (two * sigma_bar_sq / gamma).exp();
    let n = k.n();
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = k.entry(i, j) * factor;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(EstimateResult {
        estimate: KernelMatrix::new_debiased(m)?,
        debias_eigenvalue: T::one() - T::one() / factor,
        implied_noise: Some(sigma_bar_sq),
        mode: EstimateMode::Oracle,
    })
}

/// Invert the smallest-eigenvalue law lambda_1 = 1 - e^{-2 sigma^2 / gamma}:
/// returns sigma^2 = -(gamma / 2) ln(1 - lambda_1).
///
/// Accepts lambda_1 in [0, 1); values in [-1e-6, 0) are treated as roundoff
/// and clamped to 0.
pub fn noise_level_from_lambda<T: Scalar>(lambda1: T, gamma: T) -> Result<T> {
    if !(gamma.is_finite() && gamma > T::zero()) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !lambda1.is_finite() || lambda1 < -T::from_f64_const(1e-6) || lambda1 >= T::one() {
        return Err(Error::Domain(format!(
            "lambda_1 = {lambda1} outside the invertible range [0, 1)"
        )));
    }
    let lambda1 = lambda1.max(T::zero());
    let half = T::from_f64_const(0.5);
    Ok(-(gamma * half) * (T::one() - lambda1).ln())
}
