//! Experiment configuration: which scenario to run, over which dimensions,
//! how many trials, and which estimators to evaluate.

use std::fmt;
use std::str::FromStr;

use gramest::{Error, Harmonic, NoiseFamily, NoiseSpec, Result, Scenario, SignalBasis, SignalEnsemble};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Which estimate a report row refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// The observed kernel itself, no correction.
    Raw,
    /// Smallest-eigenvalue debiasing of the whole kernel.
    FullNoise,
    /// Schur-complement debiasing for a clean prefix.
    PartialNoise,
    /// Known-noise-level baseline.
    Oracle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Raw,
        EstimatorKind::FullNoise,
        EstimatorKind::PartialNoise,
        EstimatorKind::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Raw => "raw",
            EstimatorKind::FullNoise => "full_noise",
            EstimatorKind::PartialNoise => "partial_noise",
            EstimatorKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(EstimatorKind::Raw),
            "full_noise" => Ok(EstimatorKind::FullNoise),
            "partial_noise" => Ok(EstimatorKind::PartialNoise),
            "oracle" => Ok(EstimatorKind::Oracle),
            other => Err(Error::Config(format!("unknown estimator: {other}"))),
        }
    }
}

/// A full sweep description. Serialized as JSON with the scenario inlined.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scenario_id: String,
    pub scenario: Scenario<f64>,
    /// Ascending list of dimensions d.
    pub dims: Vec<usize>,
    pub trials: u64,
    pub estimators: Vec<EstimatorKind>,
    pub cond_threshold: f64,
    /// Default report destination; `run --out` overrides it.
    pub output_path: Option<String>,
}

pub const DEFAULT_DIMS: [usize; 3] = [1_000, 10_000, 100_000];
pub const DEFAULT_TRIALS: u64 = 20;
pub const DEFAULT_COND_THRESHOLD: f64 = 1e8;

impl ExperimentConfig {
    /// Defaults: dims {1e3, 1e4, 1e5}, 20 trials, raw + full_noise + oracle,
    /// plus partial_noise when the scenario has a proper clean prefix.
    pub fn with_defaults(scenario_id: impl Into<String>, scenario: Scenario<f64>) -> Self {
        let mut estimators = vec![
            EstimatorKind::Raw,
            EstimatorKind::FullNoise,
            EstimatorKind::Oracle,
        ];
        let ell = scenario.clean_prefix();
        if ell >= 1 && ell < scenario.n() {
            estimators.insert(2, EstimatorKind::PartialNoise);
        }
        ExperimentConfig {
            scenario_id: scenario_id.into(),
            scenario,
            dims: DEFAULT_DIMS.to_vec(),
            trials: DEFAULT_TRIALS,
            estimators,
            cond_threshold: DEFAULT_COND_THRESHOLD,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario_id.is_empty()
            || !self
                .scenario_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(Error::Config(format!(
                "scenario_id {:?} must be nonempty and use only [A-Za-z0-9._-]",
                self.scenario_id
            )));
        }
        if self.dims.is_empty() {
            return Err(Error::Config("dims must be nonempty".into()));
        }
        if self.dims.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "dims must be strictly ascending, got {:?}",
                self.dims
            )));
        }
        if self.dims[0] == 0 {
            return Err(Error::Config("dims must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("at least one estimator is required".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.estimators.iter().all(|e| seen.insert(*e)) {
            return Err(Error::Config("estimators must be distinct".into()));
        }
        if self.estimators.contains(&EstimatorKind::PartialNoise) {
            let ell = self.scenario.clean_prefix();
            let n = self.scenario.n();
            if ell < 1 || ell > n - 1 {
                return Err(Error::Config(format!(
                    "partial_noise requires 1 <= clean_prefix <= n-1, got ell = {ell}, n = {n}"
                )));
            }
        }
        if !(self.cond_threshold.is_finite() && self.cond_threshold > 0.0) {
            return Err(Error::Config(format!(
                "cond_threshold must be positive, got {}",
                self.cond_threshold
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let scenario: Value =
            serde_json::from_str(&self.scenario.to_json()).expect("scenario JSON is valid");
        let mut doc = serde_json::json!({
            "scenario_id": self.scenario_id,
            "scenario": scenario,
            "dims": self.dims,
            "trials": self.trials,
            "estimators": self.estimators.iter().map(|e| e.name()).collect::<Vec<_>>(),
            "cond_threshold": self.cond_threshold,
        });
        if let Some(path) = &self.output_path {
            doc["output_path"] = Value::String(path.clone());
        }
        serde_json::to_string_pretty(&doc).expect("config serializes")
    }

    /// Parse either a full experiment config (object with a "scenario" key)
    /// or a bare scenario document, in which case defaults fill the rest.
    pub fn from_json(text: &str, fallback_id: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config JSON: {e}")))?;
        if value.get("scenario").is_none() {
            let scenario = Scenario::from_json(text)?;
            return Ok(ExperimentConfig::with_defaults(fallback_id, scenario));
        }

        let scenario_text = serde_json::to_string(&value["scenario"]).expect("reserialize");
        let scenario = Scenario::from_json(&scenario_text)?;
        let mut cfg = ExperimentConfig::with_defaults(
            value
                .get("scenario_id")
                .and_then(Value::as_str)
                .unwrap_or(fallback_id),
            scenario,
        );
        if let Some(dims) = value.get("dims") {
            cfg.dims = serde_json::from_value(dims.clone())
                .map_err(|e| Error::Config(format!("dims: {e}")))?;
        }
        if let Some(trials) = value.get("trials") {
            cfg.trials = trials
                .as_u64()
                .ok_or_else(|| Error::Config("trials must be a positive integer".into()))?;
        }
        if let Some(ests) = value.get("estimators") {
            let names: Vec<String> = serde_json::from_value(ests.clone())
                .map_err(|e| Error::Config(format!("estimators: {e}")))?;
            cfg.estimators = names
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(ct) = value.get("cond_threshold") {
            cfg.cond_threshold = ct
                .as_f64()
                .ok_or_else(|| Error::Config("cond_threshold must be a number".into()))?;
        }
        if let Some(path) = value.get("output_path") {
            cfg.output_path = Some(
                path.as_str()
                    .ok_or_else(|| Error::Config("output_path must be a string".into()))?
                    .to_string(),
            );
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sin_h(h: u32) -> SignalBasis<f64> {
    SignalBasis::new(vec![Harmonic { h, a: 1.0, b: 0.0 }]).unwrap()
}

fn cos_h(h: u32) -> SignalBasis<f64> {
    SignalBasis::new(vec![Harmonic { h, a: 0.0, b: 1.0 }]).unwrap()
}

pub const PRESET_NAMES: [&str; 4] = [
    "fully-noisy",
    "partial-noise-3x3",
    "hetero",
    "full-rank-bias",
];

/// Built-in scenarios.
///
/// - `fully-noisy`: n = 4 orthogonal trig signals with one duplicated pair,
///   every row noisy (gaussian_iid, sigma^2 = 0.25, gamma = 1). The
///   duplicate makes the limit kernel singular, so the smallest-eigenvalue
///   estimator applies.
/// - `partial-noise-3x3`: n = 3, clean first row, third signal duplicates
///   the first (sigma^2 = 0.5, gamma = 1); the Schur-complement estimator's
///   reference scenario.
/// - `hetero`: as `fully-noisy` but with the bounded heteroscedastic
///   Gaussian family, amplitude 0.5.
/// - `full-rank-bias`: n = 4 distinct signals, fully noisy, no duplicate:
///   the limit kernel is full rank, so debiasing is biased; useful for
///   inspecting that bias.
pub fn preset(name: &str, seed_override: Option<u64>) -> Result<Scenario<f64>> {
    let build = |signals: Vec<SignalBasis<f64>>,
                 family: NoiseFamily,
                 sigma_sq: f64,
                 amp: f64,
                 ell: usize,
                 seed: u64,
                 pairs: Vec<(usize, usize)>|
     -> Result<Scenario<f64>> {
        let ens = SignalEnsemble::new(signals)?;
        let noise = NoiseSpec::new(family, sigma_sq, amp, seed_override.unwrap_or(seed))?;
        Scenario::new(ens, noise, ell, 1.0, pairs)
    };

    match name {
        "fully-noisy" => build(
            vec![sin_h(1), cos_h(1), sin_h(2), sin_h(1)],
            NoiseFamily::GaussianIid,
            0.25,
            0.0,
            0,
            11,
            vec![(0, 3)],
        ),
        "partial-noise-3x3" => build(
            vec![sin_h(1), cos_h(1), sin_h(1)],
            NoiseFamily::GaussianIid,
            0.5,
            0.0,
            1,
            13,
            vec![(0, 2)],
        ),
        "hetero" => build(
            vec![sin_h(1), cos_h(1), sin_h(2), sin_h(1)],
            NoiseFamily::GaussianHetero,
            0.25,
            0.5,
            0,
            17,
            vec![(0, 3)],
        ),
        "full-rank-bias" => build(
            vec![sin_h(1), cos_h(1), sin_h(2), cos_h(2)],
            NoiseFamily::GaussianIid,
            0.25,
            0.0,
            0,
            19,
            vec![],
        ),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let scn = preset(name, None).unwrap();
            let cfg = ExperimentConfig::with_defaults(name, scn);
            cfg.validate().unwrap();
            // round trip through JSON
            let back = ExperimentConfig::from_json(&cfg.to_json(), "x").unwrap();
            assert_eq!(back.scenario_id, name);
            assert_eq!(back.dims, cfg.dims);
            assert_eq!(back.estimators, cfg.estimators);
        }
    }

    #[test]
    fn partial_preset_enables_partial_estimator_by_default() {
        let scn = preset("partial-noise-3x3", None).unwrap();
        let cfg = ExperimentConfig::with_defaults("p", scn);
        assert!(cfg.estimators.contains(&EstimatorKind::PartialNoise));
        let scn = preset("fully-noisy", None).unwrap();
        let cfg = ExperimentConfig::with_defaults("f", scn);
        assert!(!cfg.estimators.contains(&EstimatorKind::PartialNoise));
    }

    #[test]
    fn bare_scenario_json_gets_defaults() {
        let scn = preset("fully-noisy", None).unwrap();
        let cfg = ExperimentConfig::from_json(&scn.to_json(), "from-file").unwrap();
        assert_eq!(cfg.scenario_id, "from-file");
        assert_eq!(cfg.dims, DEFAULT_DIMS.to_vec());
        assert_eq!(cfg.trials, DEFAULT_TRIALS);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let scn = preset("fully-noisy", None).unwrap();
        let mut cfg = ExperimentConfig::with_defaults("ok", scn.clone());
        cfg.dims = vec![100, 100];
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::with_defaults("ok", scn.clone());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::with_defaults("bad id!", scn.clone());
        cfg.scenario_id = "bad id!".into();
        assert!(cfg.validate().is_err());

        // partial_noise on a fully-noisy scenario is a config error
        let mut cfg = ExperimentConfig::with_defaults("ok", scn);
        cfg.estimators = vec![EstimatorKind::PartialNoise];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seed_override_applies() {
        let scn = preset("fully-noisy", Some(777)).unwrap();
        assert_eq!(scn.noise().seed, 777);
    }
}
