//! Consistent estimation of noise-free Gaussian kernel Gram matrices from
//! high-dimensional noisy observations.
//!
//! Observations x_i = s_i + xi_i in R^d mix deterministic signals with
//! high-dimensional noise. As d grows, the Gaussian Gram matrix of the
//! observations converges entrywise to an affine shrinkage of the noise-free
//! Gram matrix; when the noise-free limit is rank deficient the shrinkage
//! factor is identifiable from the smallest eigenvalue and can be divided
//! back out. This crate implements:
//!
//! - [`kernel`]: Gaussian and linear Gram matrices and the Hadamard
//!   combinator (with compensated distance accumulation for large d);
//! - [`synthesis`]: trig-polynomial signal ensembles with a closed-form
//!   limit kernel, three noise families with reproducible per-row RNG
//!   streams, and an empirical assumption checker;
//! - [`spectral`]: a Jacobi symmetric eigensolver, block partitioning,
//!   Schur-complement elimination, the constrained low-rank perturbation of
//!   the trailing block, and principal angles between subspaces;
//! - [`estimators`]: the smallest-eigenvalue debiasing estimator for fully
//!   noisy data, the Schur-complement estimator for partially noisy data,
//!   the known-noise oracle baseline, and the noise-level inversion.
//!
//! All numerics are generic over the scalar type through [`Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod error;
pub mod estimators;
pub mod kernel;
pub mod mat;
pub mod scalar;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use estimators::{
    estimate_full_noise, estimate_partial_noise, noise_level_from_lambda, oracle_debias,
    EstimateMode, EstimateResult, DEBIAS_EPSILON,
};
pub use kernel::{gaussian_gram, hadamard, linear_gram, scaling_parameter, KernelMatrix, ScalingRule};
pub use mat::{compensated_dot, compensated_sum, squared_distance, DataMatrix, Matrix};
pub use spectral::{
    constrained_lowrank_delta, eigenvalue_clusters, schur_complement, singular_values,
    smallest_eigenvalue, subspace_angle, sym_eigen, EigenDecomposition, LowRankPerturbation,
    PartitionedKernel,
};
pub use synthesis::{
    check_assumptions, limit_gram, observe, sample_noise, sample_signals, AssumptionReport,
    Harmonic, NoiseFamily, NoiseScalar, NoiseSpec, Scenario, SignalBasis, SignalEnsemble,
};

/// Concrete `f64` aliases for the main types.
pub type Matrix64 = Matrix<f64>;
pub type DataMatrix64 = DataMatrix<f64>;
pub type KernelMatrix64 = KernelMatrix<f64>;
pub type EigenDecomposition64 = EigenDecomposition<f64>;
pub type Scenario64 = Scenario<f64>;
pub type EstimateResult64 = EstimateResult<f64>;

/// Concrete `f32` aliases.
pub type Matrix32 = Matrix<f32>;
pub type DataMatrix32 = DataMatrix<f32>;
pub type KernelMatrix32 = KernelMatrix<f32>;
