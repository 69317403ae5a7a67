//! Monte Carlo convergence harness for the kernel estimators: experiment
//! configuration, seeded sweeps over dimension, CSV reporting, and summary
//! tables. The `gramest` binary is a thin CLI over this library.

pub mod config;
pub mod summary;
pub mod sweep;

pub use config::{preset, EstimatorKind, ExperimentConfig, PRESET_NAMES};
pub use summary::{fit_loglog_slope, render_table, summarize, summary_csv, SummaryRow};
pub use sweep::{run_sweep, ConvergenceReport, ReportRow, CSV_HEADER};
