//! `nowcast` command line.
//!
//! Exit codes: 0 success, 1 domain error (bad data, bounds, failed
//! validation), 2 I/O error. `NOWCAST_THREADS` caps the threads used to fit
//! models; results do not depend on it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::backtest::{run_backtest, BacktestConfig};
use crate::error::{Error, Result};
use crate::extratrees::ExtraTreesParams;
use crate::ingest::{self, Schema};
use crate::synth::{self, sinusoidal_seasonality, SynthConfig};
use crate::timeseries::{FeatureTable, MonthKey};
use crate::transforms::Approach;

pub const THREADS_ENV: &str = "NOWCAST_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "nowcast",
    version,
    about = "Monthly payroll nowcasting toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a CSV file against one of the input schemas and print a JSON report.
    Validate {
        path: PathBuf,
        #[arg(long)]
        schema: Schema,
    },
    /// Write a seeded synthetic target, feature series, and truth ledger.
    Synth(SynthArgs),
    /// Run an expanding-window backtest and write report files.
    Backtest(BacktestArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 96)]
    pub months: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "2012-01")]
    pub start: MonthKey,
    #[arg(long, default_value_t = 130_000.0)]
    pub base_level: f64,
    #[arg(long, default_value_t = 200.0)]
    pub trend: f64,
    /// Peak of the sinusoidal seasonal pattern.
    #[arg(long, default_value_t = 300.0)]
    pub seasonal_amplitude: f64,
    #[arg(long, default_value_t = 25.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 6)]
    pub n_features: usize,
    #[arg(long, default_value_t = 10.0)]
    pub feature_noise_sd: f64,
    #[arg(long)]
    pub shock_month: Option<MonthKey>,
    #[arg(long, default_value_t = 0.0)]
    pub shock_size: f64,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Target monthly-series CSV.
    #[arg(long)]
    pub target: PathBuf,
    /// Feature monthly-series CSVs.
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long, value_parser = parse_approach)]
    pub approach: Approach,
    #[arg(long)]
    pub min_train: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for report.json, records.csv and plot.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    /// Features drawn per split; defaults to all.
    #[arg(long)]
    pub k_features: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub min_samples_split: usize,
}

fn parse_approach(s: &str) -> std::result::Result<Approach, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs `validate`, returning whether the file passed.
pub fn cmd_validate(path: &Path, schema: Schema) -> Result<bool> {
    let report = ingest::validate(path, schema)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(report.pass)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        months: args.months,
        seed: args.seed,
        start: args.start,
        base_level: args.base_level,
        trend_per_month: args.trend,
        seasonal_amplitudes: sinusoidal_seasonality(args.seasonal_amplitude),
        noise_sd: args.noise_sd,
        n_features: args.n_features,
        feature_noise_sd: args.feature_noise_sd,
        shock_month: args.shock_month,
        shock_size: args.shock_size,
    };
    let sample = synth::generate(&config)?;
    create_dir(&args.out_dir)?;
    write_file(
        &args.out_dir.join("target.csv"),
        ingest::monthly_series_csv(&sample.target),
    )?;
    for f in &sample.features {
        write_file(
            &args.out_dir.join(format!("{}.csv", f.name())),
            ingest::monthly_series_csv(f),
        )?;
    }
    write_file(
        &args.out_dir.join("truth.json"),
        serde_json::to_string_pretty(&sample.truth)? + "\n",
    )?;
    Ok(())
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<()> {
    let target = ingest::read_monthly_series(&args.target)?;
    let target_name = target.name().to_string();
    let mut series = vec![target];
    for path in &args.features {
        series.push(ingest::read_monthly_series(path)?);
    }
    let table = FeatureTable::align(&series)?.with_target(&target_name)?;
    let config = BacktestConfig::new(
        args.approach,
        args.min_train,
        ExtraTreesParams {
            n_trees: args.n_trees,
            k_features: args.k_features,
            min_samples_split: args.min_samples_split,
            seed: args.seed,
        },
    );
    let report = run_backtest(&table, &config)?;

    create_dir(&args.out)?;
    write_file(&args.out.join("report.json"), report.to_json()? + "\n")?;
    let mut records = Vec::new();
    report.write_records_csv(&mut records)?;
    write_file(&args.out.join("records.csv"), records)?;
    let mut plot = Vec::new();
    report.write_plot_csv(&mut plot)?;
    write_file(&args.out.join("plot.csv"), plot)?;

    let m = &report.metrics;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    eprintln!(
        "approach {}: {} test months, r_squared_level {}, directional_accuracy {}",
        config.approach,
        report.records.len(),
        show(m.r_squared_level),
        show(m.directional_accuracy)
    );
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Error::InvalidParams(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParams(e.to_string()))
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_io() { 2 } else { 1 })
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return exit_for(&e);
    }
    let result = match &cli.command {
        Command::Validate { path, schema } => match cmd_validate(path, *schema) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::Synth(args) => cmd_synth(args),
        Command::Backtest(args) => cmd_backtest(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
