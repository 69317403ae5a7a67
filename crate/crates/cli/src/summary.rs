//! Aggregation of sweep reports: per (estimator, d) medians and IQRs, and a
//! log-log slope of median error against dimension per estimator.

use std::collections::BTreeMap;

use gramest::{Error, Result};

use crate::config::EstimatorKind;
use crate::sweep::ConvergenceReport;

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub estimator: EstimatorKind,
    pub d: usize,
    pub n_ok: usize,
    pub n_err: usize,
    pub median_frob: f64,
    pub iqr_frob: f64,
    pub median_implied_noise: f64,
    /// Least-squares slope of ln(median frob_error) against ln(d) for this
    /// estimator, shared by its rows; None with fewer than two usable dims.
    pub slope: Option<f64>,
}

/// Interpolating quantile (type 7) of an unsorted sample.
fn quantile(samples: &mut [f64], q: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (samples.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    samples[lo] + (h - h.floor()) * (samples[hi] - samples[lo])
}

pub fn median(samples: &mut [f64]) -> f64 {
    quantile(samples, 0.5)
}

/// Least-squares slope of ln(y) vs ln(x); None unless at least two points
/// with positive y exist.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum();
    let sy: f64 = usable.iter().map(|p| p.1).sum();
    let sxx: f64 = usable.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = usable.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

pub fn summarize(report: &ConvergenceReport) -> Result<Vec<SummaryRow>> {
    if report.rows.is_empty() {
        return Err(Error::InvalidInput("cannot summarize an empty report".into()));
    }

    // per (estimator, d): ok frob errors, ok implied noises, error count
    type Group = (Vec<f64>, Vec<f64>, usize);
    let mut groups: BTreeMap<(EstimatorKind, usize), Group> = BTreeMap::new();
    for row in &report.rows {
        let entry = groups
            .entry((row.estimator, row.d))
            .or_insert_with(|| (Vec::new(), Vec::new(), 0));
        if row.is_error() {
            entry.2 += 1;
        } else {
            entry.0.push(row.frob_error);
            if row.implied_noise.is_finite() {
                entry.1.push(row.implied_noise);
            }
        }
    }

    // slope per estimator over (d, median frob)
    let mut slope_points: BTreeMap<EstimatorKind, Vec<(f64, f64)>> = BTreeMap::new();
    let mut rows = Vec::new();
    for ((estimator, d), (mut frobs, mut implieds, n_err)) in groups {
        let n_ok = frobs.len();
        let median_frob = median(&mut frobs);
        let q25 = quantile(&mut frobs, 0.25);
        let q75 = quantile(&mut frobs, 0.75);
        let median_implied = median(&mut implieds);
        if median_frob.is_finite() {
            slope_points
                .entry(estimator)
                .or_default()
                .push((d as f64, median_frob));
        }
        rows.push(SummaryRow {
            estimator,
            d,
            n_ok,
            n_err,
            median_frob,
            iqr_frob: q75 - q25,
            median_implied_noise: median_implied,
            slope: None,
        });
    }
    for row in &mut rows {
        row.slope = slope_points
            .get(&row.estimator)
            .and_then(|pts| fit_loglog_slope(pts));
    }
    Ok(rows)
}

pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>9} {:>6} {:>6} {:>13} {:>13} {:>14} {:>8}\n",
        "estimator", "d", "ok", "err", "median_frob", "iqr_frob", "median_noise", "slope"
    ));
    for r in rows {
        let slope = r
            .slope
            .map(|s| format!("{s:8.3}"))
            .unwrap_or_else(|| format!("{:>8}", "-"));
        out.push_str(&format!(
            "{:<14} {:>9} {:>6} {:>6} {:>13.5e} {:>13.5e} {:>14.5e} {slope}\n",
            r.estimator.name(),
            r.d,
            r.n_ok,
            r.n_err,
            r.median_frob,
            r.iqr_frob,
            r.median_implied_noise,
        ));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "estimator,d,n_ok,n_err,median_frob_error,iqr_frob_error,median_implied_noise,loglog_slope\n",
    );
    for r in rows {
        let slope = r.slope.map(|s| format!("{s:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{}\n",
            r.estimator.name(),
            r.d,
            r.n_ok,
            r.n_err,
            r.median_frob,
            r.iqr_frob,
            r.median_implied_noise,
            slope
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::ReportRow;

    fn synthetic_row(d: usize, trial: u64, frob: f64) -> ReportRow {
        ReportRow {
            scenario_id: "syn".into(),
            d,
            trial,
            estimator: EstimatorKind::Raw,
            frob_error: frob,
            max_entry_error: frob,
            debias_eigenvalue: 0.1,
            implied_noise: 0.25,
            min_eig_estimate: 0.0,
            subspace_angle_deg: 1.0,
            seed: 1,
            wall_ms: 0,
            error_code: None,
        }
    }

    #[test]
    fn single_row_echo_with_null_slope() {
        let report = ConvergenceReport {
            rows: vec![synthetic_row(10, 0, 0.5)],
        };
        let rows = summarize(&report).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_ok, 1);
        assert_eq!(rows[0].median_frob, 0.5);
        assert!(rows[0].slope.is_none());
    }

    #[test]
    fn exact_power_law_recovers_slope() {
        // frob_error = d^-1/2 exactly: slope -0.5 within 1e-6
        let rows: Vec<ReportRow> = [100usize, 1000, 10000]
            .iter()
            .flat_map(|&d| {
                (0..3).map(move |t| synthetic_row(d, t, (d as f64).powf(-0.5)))
            })
            .collect();
        let report = ConvergenceReport { rows };
        let summary = summarize(&report).unwrap();
        for row in &summary {
            let slope = row.slope.unwrap();
            assert!((slope + 0.5).abs() <= 1e-6, "slope {slope}");
        }
    }

    #[test]
    fn empty_report_is_an_input_error() {
        let report = ConvergenceReport { rows: vec![] };
        assert!(summarize(&report).is_err());
    }

    #[test]
    fn error_rows_are_counted_not_aggregated() {
        let mut rows = vec![synthetic_row(10, 0, 0.5), synthetic_row(10, 1, 0.7)];
        rows.push(ReportRow {
            error_code: Some("debias_undefined".into()),
            frob_error: f64::NAN,
            ..synthetic_row(10, 2, 0.0)
        });
        let report = ConvergenceReport { rows };
        let summary = summarize(&report).unwrap();
        assert_eq!(summary[0].n_ok, 2);
        assert_eq!(summary[0].n_err, 1);
        assert!((summary[0].median_frob - 0.6).abs() < 1e-15);
    }
}
