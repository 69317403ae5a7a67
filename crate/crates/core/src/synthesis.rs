//! Synthetic data generation: trigonometric-polynomial signal ensembles,
//! noise realizations with a prescribed limit variance, the closed-form
//! limit Gram matrix, and an empirical assumption checker.
//!
//! Signals are trig polynomials f(t) = sum_h [a_h sin(2 pi h t) + b_h cos(2
//! pi h t)] sampled at midpoints t_k = (k - 1/2)/d, so every limit
//! d^-1 s_i . s_j exists by construction and equals the L2 inner product
//! int_0^1 f_i f_j, computable in closed form from the coefficients.

use std::collections::BTreeMap;

use rand::distr::uniform::SampleUniform;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::mat::{compensated_dot, DataMatrix, Matrix};
use crate::scalar::Scalar;

/// Scalar that the noise sampler can draw directly (f32 or f64).
pub trait NoiseScalar: Scalar + SampleUniform
where
    StandardNormal: Distribution<Self>,
{
}

impl<T> NoiseScalar for T
where
    T: Scalar + SampleUniform,
    StandardNormal: Distribution<T>,
{
}

/// One harmonic term: a sin(2 pi h t) + b cos(2 pi h t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harmonic<T> {
    pub h: u32,
    pub a: T,
    pub b: T,
}

/// Coefficients of one trig-polynomial signal.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalBasis<T> {
    harmonics: Vec<Harmonic<T>>,
}

impl<T: Scalar> SignalBasis<T> {
    /// Harmonic indices must be distinct and at least one coefficient must
    /// be nonzero, so the limit squared norm is strictly positive.
    pub fn new(harmonics: Vec<Harmonic<T>>) -> Result<Self> {
        if harmonics.iter().all(|h| h.a == T::zero() && h.b == T::zero()) {
            return Err(Error::InvalidInput(
                "signal needs at least one nonzero harmonic coefficient".into(),
            ));
        }
        if harmonics.iter().any(|h| h.h == 0) {
            return Err(Error::InvalidInput(
                "harmonic index must be a positive integer".into(),
            ));
        }
        if harmonics
            .iter()
            .any(|h| !(h.a.is_finite() && h.b.is_finite()))
        {
            return Err(Error::InvalidInput(
                "harmonic coefficients must be finite".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !harmonics.iter().all(|h| seen.insert(h.h)) {
            return Err(Error::InvalidInput(
                "harmonic indices within one signal must be distinct".into(),
            ));
        }
        Ok(SignalBasis { harmonics })
    }

    pub fn harmonics(&self) -> &[Harmonic<T>] {
        &self.harmonics
    }

    fn eval(&self, t: T) -> T {
        let two_pi = T::from_f64_const(std::f64::consts::TAU);
        let mut v = T::zero();
        for h in &self.harmonics {
            let arg = two_pi * T::from_u32(h.h).expect("small harmonic index") * t;
            v = v + h.a * arg.sin() + h.b * arg.cos();
        }
        v
    }

    /// Coefficient map h -> (a, b) for closed-form inner products.
    fn coeff_map(&self) -> BTreeMap<u32, (T, T)> {
        self.harmonics.iter().map(|h| (h.h, (h.a, h.b))).collect()
    }
}

/// n trig-polynomial signals, one per sample row.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalEnsemble<T> {
    signals: Vec<SignalBasis<T>>,
}

impl<T: Scalar> SignalEnsemble<T> {
    pub fn new(signals: Vec<SignalBasis<T>>) -> Result<Self> {
        if signals.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one signal".into()));
        }
        Ok(SignalEnsemble { signals })
    }

    pub fn n(&self) -> usize {
        self.signals.len()
    }

    pub fn signal(&self, i: usize) -> &SignalBasis<T> {
        &self.signals[i]
    }

    /// Squared L2 distance ||f_i - f_j||^2 from coefficient orthogonality:
    /// int sin(2 pi h t) sin(2 pi h' t) dt = delta_hh' / 2 and likewise for
    /// cosines, with all cross terms zero.
    pub fn l2_distance_sq(&self, i: usize, j: usize) -> T {
        let half = T::from_f64_const(0.5);
        let ci = self.signals[i].coeff_map();
        let cj = self.signals[j].coeff_map();
        let mut dist = T::zero();
        let keys: std::collections::BTreeSet<u32> =
            ci.keys().chain(cj.keys()).copied().collect();
        for h in keys {
            let (ai, bi) = ci.get(&h).copied().unwrap_or((T::zero(), T::zero()));
            let (aj, bj) = cj.get(&h).copied().unwrap_or((T::zero(), T::zero()));
            let da = ai - aj;
            let db = bi - bj;
            dist += half * (da * da + db * db);
        }
        dist
    }
}

/// Sample signals at d midpoints: s_{i,k} = f_i((k - 1/2)/d), k = 1..d.
pub fn sample_signals<T: Scalar>(ens: &SignalEnsemble<T>, d: usize) -> Result<DataMatrix<T>> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension d must be at least 1".into()));
    }
    let d_t = T::from_usize_exact(d);
    let half = T::from_f64_const(0.5);
    let rows = ens
        .signals
        .iter()
        .map(|f| {
            (1..=d)
                .map(|k| f.eval((T::from_usize_exact(k) - half) / d_t))
                .collect()
        })
        .collect();
    DataMatrix::from_rows(rows)
}

/// Closed-form limit kernel K^(inf): entries exp(-||f_i - f_j||^2_{L2} / gamma).
///
/// This is the ground-truth target of both estimators; it does not depend
/// on d.
pub fn limit_gram<T: Scalar>(ens: &SignalEnsemble<T>, gamma: T) -> Result<KernelMatrix<T>> {
    if !(gamma.is_finite() && gamma > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "gamma must be a positive finite real, got {gamma}"
        )));
    }
    let n = ens.n();
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (-ens.l2_distance_sq(i, j) / gamma).exp();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    KernelMatrix::new(m)
}

/// Noise distribution family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// i.i.d. Gaussian N(0, sigma_bar^2) per coordinate.
    GaussianIid,
    /// i.i.d. uniform on [-w, w] with w = sqrt(3 sigma_bar^2), so the
    /// coordinate variance equals sigma_bar^2.
    UniformIid,
    /// Independent Gaussian with bounded non-identical variances
    /// sigma_k^2 = sigma_bar^2 (1 + amplitude sin(2 pi k / d)), which
    /// average to sigma_bar^2 across coordinates.
    GaussianHetero,
}

impl NoiseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::GaussianIid => "gaussian_iid",
            NoiseFamily::UniformIid => "uniform_iid",
            NoiseFamily::GaussianHetero => "gaussian_hetero",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian_iid" => Ok(NoiseFamily::GaussianIid),
            "uniform_iid" => Ok(NoiseFamily::UniformIid),
            "gaussian_hetero" => Ok(NoiseFamily::GaussianHetero),
            other => Err(Error::Config(format!("unknown noise family: {other}"))),
        }
    }
}

/// Noise model: family, limit variance sigma_bar^2, heteroscedastic
/// amplitude, and the base RNG seed.
#[derive(Clone, Copy, Debug)]
pub struct NoiseSpec<T> {
    pub family: NoiseFamily,
    pub sigma_bar_sq: T,
    pub hetero_amplitude: T,
    pub seed: u64,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(family: NoiseFamily, sigma_bar_sq: T, hetero_amplitude: T, seed: u64) -> Result<Self> {
        if !(sigma_bar_sq.is_finite() && sigma_bar_sq >= T::zero()) {
            return Err(Error::Config(format!(
                "sigma_bar_sq must be nonnegative and finite, got {sigma_bar_sq}"
            )));
        }
        if !(hetero_amplitude.is_finite()
            && hetero_amplitude >= T::zero()
            && hetero_amplitude < T::one())
        {
            return Err(Error::Config(format!(
                "hetero_amplitude must lie in [0, 1), got {hetero_amplitude}"
            )));
        }
        Ok(NoiseSpec {
            family,
            sigma_bar_sq,
            hetero_amplitude,
            seed,
        })
    }
}

/// Independent ChaCha stream per (seed, trial, row), so trials are
/// reproducible and order-independent regardless of worker scheduling.
fn noise_stream(seed: u64, trial: u64, row: usize) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&(row as u64).to_le_bytes());
    key[24..32].copy_from_slice(b"xi-strm\0");
    ChaCha12Rng::from_seed(key)
}

/// Draw n rows of d-dimensional noise for the given trial.
pub fn sample_noise<T: NoiseScalar>(
    spec: &NoiseSpec<T>,
    n: usize,
    d: usize,
    trial: u64,
) -> Result<DataMatrix<T>>
where
    StandardNormal: Distribution<T>,
{
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(
            "noise matrix needs n >= 1 rows and d >= 1 columns".into(),
        ));
    }
    if spec.sigma_bar_sq == T::zero() {
        return DataMatrix::new(Matrix::zeros(n, d));
    }
    let sigma_bar = spec.sigma_bar_sq.sqrt();
    let rows: Vec<Vec<T>> = (0..n)
        .map(|row| {
            let mut rng = noise_stream(spec.seed, trial, row);
            match spec.family {
                NoiseFamily::GaussianIid => (0..d)
                    .map(|_| sigma_bar * StandardNormal.sample(&mut rng))
                    .collect(),
                NoiseFamily::UniformIid => {
                    let w = (T::from_f64_const(3.0) * spec.sigma_bar_sq).sqrt();
                    let u = Uniform::new_inclusive(-w, w).expect("valid uniform range");
                    (0..d).map(|_| u.sample(&mut rng)).collect()
                }
                NoiseFamily::GaussianHetero => {
                    let two_pi = T::from_f64_const(std::f64::consts::TAU);
                    let d_t = T::from_usize_exact(d);
                    (1..=d)
                        .map(|k| {
                            let profile = T::one()
                                + spec.hetero_amplitude
                                    * (two_pi * T::from_usize_exact(k) / d_t).sin();
                            let sd = (spec.sigma_bar_sq * profile).sqrt();
                            sd * StandardNormal.sample(&mut rng)
                        })
                        .collect()
                }
            }
        })
        .collect();
    DataMatrix::from_rows(rows)
}

/// Full experiment scenario: signals, noise model, clean prefix, bandwidth
/// ratio, and duplicate pairs that force rank deficiency of the limit
/// kernel.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    signals: SignalEnsemble<T>,
    noise: NoiseSpec<T>,
    clean_prefix: usize,
    gamma: T,
    duplicate_pairs: Vec<(usize, usize)>,
}

impl<T: Scalar> Scenario<T> {
    /// `duplicate_pairs` entries are 0-based (src, dst): signal `dst`'s
    /// coefficients are replaced by signal `src`'s. The stored ensemble is
    /// the resolved one.
    pub fn new(
        signals: SignalEnsemble<T>,
        noise: NoiseSpec<T>,
        clean_prefix: usize,
        gamma: T,
        duplicate_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = signals.n();
        if clean_prefix > n {
            return Err(Error::Config(format!(
                "clean_prefix = {clean_prefix} must lie in [0, n] (n = {n})"
            )));
        }
        if !(gamma.is_finite() && gamma > T::zero()) {
            return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
        }
        let mut resolved = signals.signals.clone();
        for &(src, dst) in &duplicate_pairs {
            if src >= n || dst >= n {
                return Err(Error::Config(format!(
                    "duplicate pair ({src}, {dst}) out of range for n = {n}"
                )));
            }
            if src == dst {
                return Err(Error::Config(
                    "duplicate pair must reference two distinct signals".into(),
                ));
            }
            resolved[dst] = resolved[src].clone();
        }
        Ok(Scenario {
            signals: SignalEnsemble { signals: resolved },
            noise,
            clean_prefix,
            gamma,
            duplicate_pairs,
        })
    }

    pub fn n(&self) -> usize {
        self.signals.n()
    }

    /// Number of noisy rows m = n - ell.
    pub fn m(&self) -> usize {
        self.n() - self.clean_prefix
    }

    pub fn clean_prefix(&self) -> usize {
        self.clean_prefix
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn noise(&self) -> &NoiseSpec<T> {
        &self.noise
    }

    pub fn signals(&self) -> &SignalEnsemble<T> {
        &self.signals
    }

    pub fn duplicate_pairs(&self) -> &[(usize, usize)] {
        &self.duplicate_pairs
    }

    /// Closed-form limit kernel of the (resolved) ensemble.
    pub fn limit_kernel(&self) -> Result<KernelMatrix<T>> {
        limit_gram(&self.signals, self.gamma)
    }
}

/// Observation model: rows 1..ell are the pure signals, rows ell+1..n are
/// signal plus noise.
pub fn observe<T: NoiseScalar>(scenario: &Scenario<T>, d: usize, trial: u64) -> Result<DataMatrix<T>>
where
    StandardNormal: Distribution<T>,
{
    let n = scenario.n();
    let ell = scenario.clean_prefix;
    let s = sample_signals(&scenario.signals, d)?;
    if ell == n {
        return Ok(s);
    }
    let xi = sample_noise(&scenario.noise, n, d, trial)?;
    let rows = (0..n)
        .map(|i| {
            if i < ell {
                s.row(i).to_vec()
            } else {
                s.row(i)
                    .iter()
                    .zip(xi.row(i))
                    .map(|(&a, &b)| a + b)
                    .collect()
            }
        })
        .collect();
    DataMatrix::from_rows(rows)
}

/// Empirical statistics behind the noise assumptions: squared-norm averages
/// d^-1 ||xi_i||^2, noise cross products d^-1 xi_i . xi_j, and signal-noise
/// cross products d^-1 s_i . xi_j, with their worst deviations from
/// (sigma_bar^2, 0, 0).
#[derive(Clone, Debug)]
pub struct AssumptionReport<T> {
    /// d^-1 ||xi_i||^2 per row.
    pub noise_norms: Vec<T>,
    /// (i, j, d^-1 xi_i . xi_j) for i < j.
    pub noise_cross: Vec<(usize, usize, T)>,
    /// d^-1 s_i . xi_j for all i, j (n x n).
    pub signal_cross: Matrix<T>,
    pub max_dev_norm: T,
    pub max_dev_noise_cross: T,
    pub max_dev_signal_cross: T,
}

pub fn check_assumptions<T: Scalar>(
    signals: &DataMatrix<T>,
    noise: &DataMatrix<T>,
    sigma_bar_sq: T,
) -> Result<AssumptionReport<T>> {
    if signals.n() != noise.n() {
        return Err(Error::DimensionMismatch {
            context: "signal and noise row counts",
            expected: signals.n(),
            found: noise.n(),
        });
    }
    if signals.dim() != noise.dim() {
        return Err(Error::DimensionMismatch {
            context: "signal and noise dimensions",
            expected: signals.dim(),
            found: noise.dim(),
        });
    }
    let n = signals.n();
    let inv_d = T::one() / T::from_usize_exact(signals.dim());

    let noise_norms: Vec<T> = (0..n)
        .map(|i| compensated_dot(noise.row(i), noise.row(i)) * inv_d)
        .collect();
    let mut noise_cross = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            noise_cross.push((i, j, compensated_dot(noise.row(i), noise.row(j)) * inv_d));
        }
    }
    let signal_cross =
        Matrix::from_fn(n, n, |i, j| compensated_dot(signals.row(i), noise.row(j)) * inv_d);

    let max_dev_norm = noise_norms
        .iter()
        .fold(T::zero(), |acc, &v| acc.max((v - sigma_bar_sq).abs()));
    let max_dev_noise_cross = noise_cross
        .iter()
        .fold(T::zero(), |acc, &(_, _, v)| acc.max(v.abs()));
    let max_dev_signal_cross = signal_cross.max_abs();

    Ok(AssumptionReport {
        noise_norms,
        noise_cross,
        signal_cross,
        max_dev_norm,
        max_dev_noise_cross,
        max_dev_signal_cross,
    })
}

// --- Scenario JSON document -------------------------------------------------
//
// Flat on-disk schema; indices are 1-based in the file and 0-based in the
// API.

#[derive(Serialize, Deserialize)]
struct HarmonicDoc {
    h: u32,
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct SignalDoc {
    harmonics: Vec<HarmonicDoc>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    n: usize,
    gamma: f64,
    sigma_bar_sq: f64,
    noise_family: String,
    hetero_amplitude: f64,
    clean_prefix: usize,
    seed: u64,
    signals: Vec<SignalDoc>,
    duplicate_pairs: Vec<[usize; 2]>,
}

impl<T: Scalar> Scenario<T> {
    pub fn to_json(&self) -> String {
        let doc = ScenarioDoc {
            n: self.n(),
            gamma: self.gamma.as_f64(),
            sigma_bar_sq: self.noise.sigma_bar_sq.as_f64(),
            noise_family: self.noise.family.name().to_string(),
            hetero_amplitude: self.noise.hetero_amplitude.as_f64(),
            clean_prefix: self.clean_prefix,
            seed: self.noise.seed,
            signals: self
                .signals
                .signals
                .iter()
                .map(|s| SignalDoc {
                    harmonics: s
                        .harmonics
                        .iter()
                        .map(|h| HarmonicDoc {
                            h: h.h,
                            a: h.a.as_f64(),
                            b: h.b.as_f64(),
                        })
                        .collect(),
                })
                .collect(),
            duplicate_pairs: self
                .duplicate_pairs
                .iter()
                .map(|&(i, j)| [i + 1, j + 1])
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDoc =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario JSON: {e}")))?;
        if doc.n != doc.signals.len() {
            return Err(Error::Config(format!(
                "scenario declares n = {} but lists {} signals",
                doc.n,
                doc.signals.len()
            )));
        }
        let signals = SignalEnsemble::new(
            doc.signals
                .into_iter()
                .map(|s| {
                    SignalBasis::new(
                        s.harmonics
                            .into_iter()
                            .map(|h| Harmonic {
                                h: h.h,
                                a: T::from_f64_const(h.a),
                                b: T::from_f64_const(h.b),
                            })
                            .collect(),
                    )
                })
                .collect::<Result<Vec<_>>>()?,
        )?;
        let family = NoiseFamily::parse(&doc.noise_family)?;
        let noise = NoiseSpec::new(
            family,
            T::from_f64_const(doc.sigma_bar_sq),
            T::from_f64_const(doc.hetero_amplitude),
            doc.seed,
        )?;
        let pairs = doc
            .duplicate_pairs
            .iter()
            .map(|&[i, j]| {
                if i == 0 || j == 0 {
                    Err(Error::Config(
                        "duplicate_pairs indices are 1-based and must be >= 1".into(),
                    ))
                } else {
                    Ok((i - 1, j - 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(
            signals,
            noise,
            doc.clean_prefix,
            T::from_f64_const(doc.gamma),
            pairs,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sin_h(h: u32) -> SignalBasis<f64> {
        SignalBasis::new(vec![Harmonic { h, a: 1.0, b: 0.0 }]).unwrap()
    }

    fn cos_h(h: u32) -> SignalBasis<f64> {
        SignalBasis::new(vec![Harmonic { h, a: 0.0, b: 1.0 }]).unwrap()
    }

    #[test]
    fn midpoint_sampling_matches_direct_evaluation() {
        let ens = SignalEnsemble::new(vec![sin_h(1)]).unwrap();
        let s = sample_signals(&ens, 4).unwrap();
        let expected = [
            (std::f64::consts::PI / 4.0).sin(),
            (3.0 * std::f64::consts::PI / 4.0).sin(),
            (5.0 * std::f64::consts::PI / 4.0).sin(),
            (7.0 * std::f64::consts::PI / 4.0).sin(),
        ];
        for (k, &e) in expected.iter().enumerate() {
            assert_relative_eq!(s.row(0)[k], e, max_relative = 1e-15);
        }
    }

    #[test]
    fn duplicated_signals_sample_identically() {
        let ens = SignalEnsemble::new(vec![sin_h(1), cos_h(2), sin_h(3)]).unwrap();
        let noise = NoiseSpec::new(NoiseFamily::GaussianIid, 0.1, 0.0, 7).unwrap();
        let scn = Scenario::new(ens, noise, 0, 1.0, vec![(0, 2)]).unwrap();
        for d in [8, 33, 100] {
            let s = sample_signals(scn.signals(), d).unwrap();
            assert_eq!(s.row(0), s.row(2));
        }
    }

    #[test]
    fn squared_norm_average_converges_to_half() {
        // f(t) = sin(2 pi t): int f^2 = 1/2, and the midpoint rule is exact
        // for trig polynomials once d exceeds the bandwidth.
        let ens = SignalEnsemble::new(vec![sin_h(1)]).unwrap();
        for d in [16usize, 1000, 10000] {
            let s = sample_signals(&ens, d).unwrap();
            let v = compensated_dot(s.row(0), s.row(0)) / d as f64;
            assert!((v - 0.5).abs() < 1e-13, "d = {d}, got {v}");
        }
    }

    #[test]
    fn limit_gram_examples() {
        // duplicated pair: unit entry and an exactly repeated row
        let ens = SignalEnsemble::new(vec![sin_h(1), cos_h(1), sin_h(1)]).unwrap();
        let k = limit_gram(&ens, 1.0).unwrap();
        assert_eq!(k.entry(0, 2), 1.0);
        for j in 0..3 {
            assert_eq!(k.entry(0, j), k.entry(2, j));
        }

        // orthogonal unit-half-norm signals: ||f1 - f2||^2 = 1
        assert_relative_eq!(k.entry(0, 1), (-1.0f64).exp(), max_relative = 1e-15);

        // single signal
        let one = SignalEnsemble::new(vec![sin_h(1)]).unwrap();
        let k1 = limit_gram(&one, 2.0).unwrap();
        assert_eq!(k1.n(), 1);
        assert_eq!(k1.entry(0, 0), 1.0);
    }

    #[test]
    fn zero_variance_noise_is_exactly_zero() {
        let spec = NoiseSpec::new(NoiseFamily::UniformIid, 0.0, 0.0, 3).unwrap();
        let xi = sample_noise(&spec, 2, 64, 0).unwrap();
        assert!(xi.matrix().max_abs() == 0.0);
    }

    #[test]
    fn noise_streams_are_reproducible_and_row_independent() {
        let spec = NoiseSpec::new(NoiseFamily::GaussianIid, 0.25, 0.0, 42).unwrap();
        let a = sample_noise(&spec, 3, 50, 5).unwrap();
        let b = sample_noise(&spec, 3, 50, 5).unwrap();
        for i in 0..3 {
            assert_eq!(a.row(i), b.row(i));
        }
        // different trials decorrelate
        let c = sample_noise(&spec, 3, 50, 6).unwrap();
        assert_ne!(a.row(0), c.row(0));
        // rows are independent streams: row 1 of a 3-row draw equals row 1
        // of a 2-row draw
        let two = sample_noise(&spec, 2, 50, 5).unwrap();
        assert_eq!(a.row(1), two.row(1));
    }

    #[test]
    fn gaussian_norm_statistic_concentrates() {
        // d^-1 ||xi||^2 within 0.25 +- 0.01 for >= 95% of trials at d = 1e5
        let spec = NoiseSpec::<f64>::new(NoiseFamily::GaussianIid, 0.25, 0.0, 11).unwrap();
        let mut ok = 0u64;
        let trials = 40u64;
        for t in 0..trials {
            let xi = sample_noise(&spec, 1, 100_000, t).unwrap();
            let v = compensated_dot(xi.row(0), xi.row(0)) / 1e5;
            if (v - 0.25).abs() <= 0.01 {
                ok += 1;
            }
        }
        assert!(ok * 100 >= trials * 95, "only {ok}/{trials} within band");
    }

    #[test]
    fn hetero_variance_tracks_profile_in_binned_averages() {
        let amp = 0.5;
        let d = 256usize;
        let reps = 1000usize;
        let spec = NoiseSpec::<f64>::new(NoiseFamily::GaussianHetero, 0.25, amp, 19).unwrap();
        let mut sum_sq = vec![0.0f64; d];
        for t in 0..reps {
            let xi = sample_noise(&spec, 1, d, t as u64).unwrap();
            for (k, &v) in xi.row(0).iter().enumerate() {
                sum_sq[k] += v * v;
            }
        }
        let bins = 8;
        let w = d / bins;
        for b in 0..bins {
            let emp: f64 =
                sum_sq[b * w..(b + 1) * w].iter().sum::<f64>() / (w * reps) as f64;
            let profile: f64 = (b * w..(b + 1) * w)
                .map(|k0| {
                    let k = k0 + 1;
                    0.25 * (1.0 + amp * (std::f64::consts::TAU * k as f64 / d as f64).sin())
                })
                .sum::<f64>()
                / w as f64;
            assert!(
                (emp - profile).abs() < 0.03 * 0.25 + 0.01 * profile,
                "bin {b}: empirical {emp:.4} vs profile {profile:.4}"
            );
        }
    }

    #[test]
    fn observe_respects_clean_prefix() {
        let ens = SignalEnsemble::new(vec![sin_h(1), cos_h(1), sin_h(2)]).unwrap();
        let noise = NoiseSpec::new(NoiseFamily::GaussianIid, 0.5, 0.0, 23).unwrap();

        // ell = n: identical to the signal samples
        let scn = Scenario::new(ens.clone(), noise, 3, 1.0, vec![]).unwrap();
        let x = observe(&scn, 32, 0).unwrap();
        let s = sample_signals(scn.signals(), 32).unwrap();
        for i in 0..3 {
            assert_eq!(x.row(i), s.row(i));
        }

        // ell = 0: every row is signal + noise
        let scn = Scenario::new(ens.clone(), noise, 0, 1.0, vec![]).unwrap();
        let x = observe(&scn, 32, 0).unwrap();
        let xi = sample_noise(&noise, 3, 32, 0).unwrap();
        for i in 0..3 {
            for k in 0..32 {
                assert_relative_eq!(
                    x.row(i)[k],
                    s.row(i)[k] + xi.row(i)[k],
                    max_relative = 1e-15
                );
            }
        }

        // ell = 1: first row is exactly the signal
        let scn = Scenario::new(ens, noise, 1, 1.0, vec![]).unwrap();
        let x = observe(&scn, 32, 0).unwrap();
        assert_eq!(x.row(0), s.row(0));
        assert_ne!(x.row(1), s.row(1));
    }

    #[test]
    fn scenario_rejects_bad_config() {
        let ens = SignalEnsemble::new(vec![sin_h(1), cos_h(1)]).unwrap();
        let noise = NoiseSpec::new(NoiseFamily::GaussianIid, 0.5, 0.0, 1).unwrap();
        assert!(Scenario::new(ens.clone(), noise, 3, 1.0, vec![]).is_err());
        assert!(Scenario::new(ens.clone(), noise, 0, 0.0, vec![]).is_err());
        assert!(Scenario::new(ens.clone(), noise, 0, 1.0, vec![(0, 5)]).is_err());
        assert!(Scenario::new(ens, noise, 0, 1.0, vec![(1, 1)]).is_err());
    }

    #[test]
    fn check_assumptions_zero_noise() {
        let ens = SignalEnsemble::new(vec![sin_h(1), cos_h(1)]).unwrap();
        let s = sample_signals(&ens, 100).unwrap();
        let zero = DataMatrix::new(Matrix::zeros(2, 100)).unwrap();
        let rep = check_assumptions(&s, &zero, 0.0).unwrap();
        assert_eq!(rep.max_dev_norm, 0.0);
        assert_eq!(rep.max_dev_noise_cross, 0.0);
        assert_eq!(rep.max_dev_signal_cross, 0.0);
    }

    #[test]
    fn check_assumptions_dimension_mismatch() {
        let ens = SignalEnsemble::new(vec![sin_h(1)]).unwrap();
        let s = sample_signals(&ens, 10).unwrap();
        let xi = DataMatrix::new(Matrix::zeros(1, 11)).unwrap();
        assert!(check_assumptions(&s, &xi, 0.0).is_err());
    }

    #[test]
    fn noise_cross_products_obey_clt_band() {
        // |d^-1 xi_i . xi_j| <= 3 sqrt(sigma^4 / d) for >= 99% of pairs
        let spec = NoiseSpec::new(NoiseFamily::GaussianIid, 0.5, 0.0, 29).unwrap();
        let d = 100_000;
        let bound = 3.0 * (0.5f64 * 0.5 / d as f64).sqrt();
        let mut total = 0;
        let mut ok = 0;
        for t in 0..100 {
            let xi = sample_noise(&spec, 4, d, t).unwrap();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let v = compensated_dot(xi.row(i), xi.row(j)) / d as f64;
                    total += 1;
                    if v.abs() <= bound {
                        ok += 1;
                    }
                }
            }
        }
        assert!(ok * 100 >= total * 99, "{ok}/{total} inside 3-sigma band");
    }

    #[test]
    fn scenario_json_round_trip() {
        let ens = SignalEnsemble::new(vec![sin_h(1), cos_h(1), sin_h(2)]).unwrap();
        let noise = NoiseSpec::new(NoiseFamily::GaussianHetero, 0.25, 0.5, 99).unwrap();
        let scn = Scenario::<f64>::new(ens, noise, 1, 2.0, vec![(0, 2)]).unwrap();
        let text = scn.to_json();
        // 1-based indices on disk
        assert!(text.contains("\"duplicate_pairs\""));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["duplicate_pairs"][0][0], 1);
        assert_eq!(parsed["duplicate_pairs"][0][1], 3);
        assert_eq!(parsed["n"], 3);

        let back = Scenario::<f64>::from_json(&text).unwrap();
        assert_eq!(back.n(), 3);
        assert_eq!(back.clean_prefix(), 1);
        assert_eq!(back.gamma(), 2.0);
        assert_eq!(back.noise().family, NoiseFamily::GaussianHetero);
        assert_eq!(back.duplicate_pairs(), &[(0, 2)]);
        // resolved duplicate: signal 2 equals signal 0
        assert_eq!(back.signals().signal(2), back.signals().signal(0));
    }
}
