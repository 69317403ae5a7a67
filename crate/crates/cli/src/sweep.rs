//! Seeded Monte Carlo sweep over dimensions: sample, observe, build the
//! kernel, run each requested estimator, and score it against the
//! closed-form limit kernel.
//!
//! Rows are keyed by (d, trial, estimator) and the per-row RNG streams
//! depend only on (seed, trial, row), so the report is identical for any
//! worker count; rows are sorted before emission.

use std::io::{BufRead, Write};
use std::time::Instant;

use gramest::{
    estimate_full_noise, estimate_partial_noise, gaussian_gram, noise_level_from_lambda, observe,
    oracle_debias, subspace_angle, sym_eigen, Error, KernelMatrix, Matrix, PartitionedKernel,
    Result, Scenario,
};
use rayon::prelude::*;

use crate::config::{EstimatorKind, ExperimentConfig};

/// Exact CSV header required of every report file.
pub const CSV_HEADER: &str = "scenario_id,d,trial,estimator,frob_error,max_entry_error,debias_eigenvalue,implied_noise,min_eig_estimate,subspace_angle_deg,seed,wall_ms,error_code";

/// One (d, trial, estimator) outcome. Metric fields are NaN when
/// `error_code` is set.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub scenario_id: String,
    pub d: usize,
    pub trial: u64,
    pub estimator: EstimatorKind,
    pub frob_error: f64,
    pub max_entry_error: f64,
    pub debias_eigenvalue: f64,
    pub implied_noise: f64,
    pub min_eig_estimate: f64,
    pub subspace_angle_deg: f64,
    pub seed: u64,
    pub wall_ms: u64,
    pub error_code: Option<String>,
}

impl ReportRow {
    pub fn is_error(&self) -> bool {
        self.error_code.is_some()
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
}

/// 17 significant digits, enough to round-trip any f64.
fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

impl ConvergenceReport {
    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(ReportRow::is_error)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.scenario_id,
                r.d,
                r.trial,
                r.estimator.name(),
                fmt_float(r.frob_error),
                fmt_float(r.max_entry_error),
                fmt_float(r.debias_eigenvalue),
                fmt_float(r.implied_noise),
                fmt_float(r.min_eig_estimate),
                fmt_float(r.subspace_angle_deg),
                r.seed,
                r.wall_ms,
                r.error_code.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?
            .map_err(|e| Error::InvalidInput(format!("CSV read: {e}")))?;
        if header.trim_end() != CSV_HEADER {
            return Err(Error::InvalidInput(format!(
                "unexpected CSV header: {header}"
            )));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::InvalidInput(format!("CSV read: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 13 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected 13 fields, found {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse_f = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 2)))
            };
            let parse_u = |s: &str| -> Result<u64> {
                s.parse()
                    .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 2)))
            };
            rows.push(ReportRow {
                scenario_id: fields[0].to_string(),
                d: parse_u(fields[1])? as usize,
                trial: parse_u(fields[2])?,
                estimator: fields[3].parse()?,
                frob_error: parse_f(fields[4])?,
                max_entry_error: parse_f(fields[5])?,
                debias_eigenvalue: parse_f(fields[6])?,
                implied_noise: parse_f(fields[7])?,
                min_eig_estimate: parse_f(fields[8])?,
                subspace_angle_deg: parse_f(fields[9])?,
                seed: parse_u(fields[10])?,
                wall_ms: parse_u(fields[11])?,
                error_code: if fields[12].is_empty() {
                    None
                } else {
                    Some(fields[12].to_string())
                },
            });
        }
        Ok(ConvergenceReport { rows })
    }
}

struct Metrics {
    frob_error: f64,
    max_entry_error: f64,
    min_eig_estimate: f64,
    subspace_angle_deg: f64,
}

/// Score one estimate against the limit kernel: Frobenius and max-entry
/// error, smallest eigenvalue (PSD diagnostic), and the principal angle
/// between top eigenvectors in degrees.
fn score(estimate: &KernelMatrix<f64>, limit: &Matrix<f64>, limit_top: &Matrix<f64>) -> Result<Metrics> {
    let diff = estimate.matrix().sub(limit);
    let eig = sym_eigen(estimate.matrix())?;
    let n = estimate.n();
    let top = eig.eigenvector(n - 1);
    let angle = subspace_angle(&top, limit_top)?;
    Ok(Metrics {
        frob_error: diff.frobenius_norm(),
        max_entry_error: diff.max_abs(),
        min_eig_estimate: eig.values[0],
        subspace_angle_deg: angle.to_degrees(),
    })
}

/// Implied noise level from a debias eigenvalue, NaN outside the invertible
/// range.
fn implied_noise_or_nan(lambda: f64, gamma: f64) -> f64 {
    noise_level_from_lambda(lambda, gamma).unwrap_or(f64::NAN)
}

fn run_estimator(
    kind: EstimatorKind,
    kernel: &KernelMatrix<f64>,
    scenario: &Scenario<f64>,
    cond_threshold: f64,
) -> Result<(KernelMatrix<f64>, f64, f64)> {
    let gamma = scenario.gamma();
    match kind {
        EstimatorKind::Raw => {
            let lambda1 = gramest::smallest_eigenvalue(kernel.matrix())?;
            Ok((
                kernel.clone(),
                lambda1,
                implied_noise_or_nan(lambda1, gamma),
            ))
        }
        EstimatorKind::FullNoise => {
            let est = estimate_full_noise(kernel)?;
            let implied = implied_noise_or_nan(est.debias_eigenvalue, gamma);
            Ok((est.estimate, est.debias_eigenvalue, implied))
        }
        EstimatorKind::PartialNoise => {
            let p = PartitionedKernel::new(kernel, scenario.clean_prefix())?;
            let est = estimate_partial_noise(&p, cond_threshold)?;
            let implied = implied_noise_or_nan(est.debias_eigenvalue, gamma);
            Ok((est.estimate, est.debias_eigenvalue, implied))
        }
        EstimatorKind::Oracle => {
            let est = oracle_debias(kernel, scenario.noise().sigma_bar_sq, gamma)?;
            Ok((
                est.estimate,
                est.debias_eigenvalue,
                est.implied_noise.unwrap_or(f64::NAN),
            ))
        }
    }
}

fn error_row(cfg: &ExperimentConfig, d: usize, trial: u64, kind: EstimatorKind, err: &Error) -> ReportRow {
    ReportRow {
        scenario_id: cfg.scenario_id.clone(),
        d,
        trial,
        estimator: kind,
        frob_error: f64::NAN,
        max_entry_error: f64::NAN,
        debias_eigenvalue: f64::NAN,
        implied_noise: f64::NAN,
        min_eig_estimate: f64::NAN,
        subspace_angle_deg: f64::NAN,
        seed: cfg.scenario.noise().seed,
        wall_ms: 0,
        error_code: Some(err.code().to_string()),
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    limit: &Matrix<f64>,
    limit_top: &Matrix<f64>,
    d: usize,
    trial: u64,
) -> Vec<ReportRow> {
    let start = Instant::now();
    let kernel = observe(&cfg.scenario, d, trial).and_then(|x| {
        let c_d = cfg.scenario.gamma() * d as f64;
        gaussian_gram(&x, c_d)
    });
    let sample_ms = start.elapsed().as_millis() as u64;

    let kernel = match kernel {
        Ok(k) => k,
        Err(e) => {
            return cfg
                .estimators
                .iter()
                .map(|&kind| error_row(cfg, d, trial, kind, &e))
                .collect();
        }
    };

    cfg.estimators
        .iter()
        .map(|&kind| {
            let t0 = Instant::now();
            let outcome = run_estimator(kind, &kernel, &cfg.scenario, cfg.cond_threshold)
                .and_then(|(est, debias, implied)| {
                    let m = score(&est, limit, limit_top)?;
                    Ok((m, debias, implied))
                });
            match outcome {
                Ok((m, debias, implied)) => ReportRow {
                    scenario_id: cfg.scenario_id.clone(),
                    d,
                    trial,
                    estimator: kind,
                    frob_error: m.frob_error,
                    max_entry_error: m.max_entry_error,
                    debias_eigenvalue: debias,
                    implied_noise: implied,
                    min_eig_estimate: m.min_eig_estimate,
                    subspace_angle_deg: m.subspace_angle_deg,
                    seed: cfg.scenario.noise().seed,
                    wall_ms: sample_ms + t0.elapsed().as_millis() as u64,
                    error_code: None,
                },
                Err(e) => error_row(cfg, d, trial, kind, &e),
            }
        })
        .collect()
}

/// Run the full sweep. `workers` caps the rayon pool size (0 = library
/// default); the output is byte-identical (up to wall_ms) for any value.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let limit = cfg.scenario.limit_kernel()?;
    let limit_eig = sym_eigen(limit.matrix())?;
    let limit_top = limit_eig.eigenvector(limit.n() - 1);
    let limit_matrix = limit.matrix().clone();

    let cells: Vec<(usize, u64)> = cfg
        .dims
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut rows: Vec<ReportRow> = pool.install(|| {
        cells
            .par_iter()
            .flat_map_iter(|&(d, t)| run_cell(cfg, &limit_matrix, &limit_top, d, t))
            .collect()
    });

    rows.sort_by_key(|r| (r.d, r.trial, r.estimator));
    Ok(ConvergenceReport { rows })
}
