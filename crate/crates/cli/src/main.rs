use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use gramest::{check_assumptions, sample_noise, sample_signals, Error};
use gramest_cli::{
    preset, render_table, run_sweep, summarize, summary_csv, ConvergenceReport, ExperimentConfig,
    PRESET_NAMES,
};

/// Gaussian kernel Gram matrix estimation from noisy high-dimensional data:
/// scenario generation, Monte Carlo convergence sweeps, and reporting.
#[derive(Parser)]
#[command(name = "gramest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a scenario JSON document from a named preset.
    Generate {
        /// One of: fully-noisy, partial-noise-3x3, hetero, full-rank-bias.
        #[arg(long)]
        preset: String,
        /// Output path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the preset's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a Monte Carlo sweep described by a config (or bare scenario) JSON
    /// and write the per-trial report CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report CSV output path (falls back to the config's output_path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = one per core). The report is identical for
        /// any worker count.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override dims, comma separated (e.g. 1000,10000,100000).
        #[arg(long)]
        dims: Option<String>,
        /// Override the number of trials per dimension.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the estimator list, comma separated
        /// (raw,full_noise,partial_noise,oracle).
        #[arg(long)]
        estimators: Option<String>,
    },
    /// Aggregate a report CSV into per-(estimator, d) medians and slopes.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also write the summary as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sample noise for a scenario and report the empirical deviations from
    /// the assumed limits (norms, noise cross products, signal-noise cross
    /// products).
    CheckAssumptions {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        trials: u64,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn file_stem_id(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string()
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg = ExperimentConfig::from_json(&text, &file_stem_id(path))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { preset: name, out, seed } => {
            let scenario = preset(&name, seed).map_err(|e| {
                anyhow::anyhow!("{e}. Available presets: {}", PRESET_NAMES.join(", "))
            })?;
            let json = scenario.to_json();
            match out {
                Some(path) => fs::write(&path, json.as_bytes())
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Run {
            config,
            out,
            workers,
            dims,
            trials,
            estimators,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(dims) = dims {
                cfg.dims = dims
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().context("parsing --dims"))
                    .collect::<Result<Vec<_>>>()?;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(list) = estimators {
                cfg.estimators = list
                    .split(',')
                    .map(|s| s.trim().parse().map_err(anyhow::Error::from))
                    .collect::<Result<Vec<_>>>()?;
            }
            cfg.validate()?;
            let out = out
                .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
                .ok_or_else(|| {
                    Error::Config("no output path: pass --out or set output_path".into())
                })?;

            let report = run_sweep(&cfg, workers)?;
            let mut file = fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            report.write_csv(&mut file)?;
            eprintln!(
                "wrote {} rows to {}",
                report.rows.len(),
                out.display()
            );
            if report.all_failed() {
                eprintln!("every trial failed; see error_code column");
                return Ok(ExitCode::from(EXIT_ALL_FAILED));
            }
            print!("{}", render_table(&summarize(&report)?));
            Ok(ExitCode::SUCCESS)
        }

        Command::Summarize { input, csv } => {
            let file = fs::File::open(&input)
                .with_context(|| format!("opening {}", input.display()))?;
            let report = ConvergenceReport::read_csv(std::io::BufReader::new(file))?;
            let rows = summarize(&report)?;
            print!("{}", render_table(&rows));
            if let Some(path) = csv {
                fs::write(&path, summary_csv(&rows))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::CheckAssumptions { config, d, trials } => {
            if d == 0 || trials == 0 {
                return Err(Error::Config("--d and --trials must be positive".into()).into());
            }
            let cfg = load_config(&config)?;
            let scenario = &cfg.scenario;
            let signals = sample_signals(scenario.signals(), d)?;
            let sigma_sq = scenario.noise().sigma_bar_sq;

            let mut dev_norm = Vec::new();
            let mut dev_cross = Vec::new();
            let mut dev_signal = Vec::new();
            for trial in 0..trials {
                let xi = sample_noise(scenario.noise(), scenario.n(), d, trial)?;
                let rep = check_assumptions(&signals, &xi, sigma_sq)?;
                dev_norm.push(rep.max_dev_norm);
                dev_cross.push(rep.max_dev_noise_cross);
                dev_signal.push(rep.max_dev_signal_cross);
            }

            let worst = |v: &[f64]| v.iter().cloned().fold(0.0f64, f64::max);
            let med = |v: &mut Vec<f64>| gramest_cli::summary::median(v);
            println!(
                "assumption deviations for '{}' at d = {d} over {trials} trials",
                cfg.scenario_id
            );
            println!("{:<40} {:>12} {:>12}", "statistic", "median", "worst");
            println!(
                "{:<40} {:>12.5e} {:>12.5e}",
                "max |d^-1 ||xi_i||^2 - sigma^2|",
                med(&mut dev_norm),
                worst(&dev_norm)
            );
            println!(
                "{:<40} {:>12.5e} {:>12.5e}",
                "max |d^-1 xi_i . xi_j|, i != j",
                med(&mut dev_cross),
                worst(&dev_cross)
            );
            println!(
                "{:<40} {:>12.5e} {:>12.5e}",
                "max |d^-1 s_i . xi_j|",
                med(&mut dev_signal),
                worst(&dev_signal)
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
