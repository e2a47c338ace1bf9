//! `sensor-anomaly` command line.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sensor-anomaly", version, about = "Anomaly detection for sensor time series")]
pub struct Cli {
    /// Seed for every random stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat `key = value` config file with `[section]` headers.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop junk readings and repair the repeated daylight-saving hour.
    Clean(CleanArgs),
    /// Additive trend / seasonal / residual decomposition.
    Decompose(DecomposeArgs),
    /// Pearson, Spearman and Kendall coefficients of two sensors.
    Correlate(CorrelateArgs),
    /// Inject labelled synthetic anomalies.
    Inject(InjectArgs),
    /// Run one detector and write an anomaly report.
    Detect(DetectArgs),
    /// Metrics, fault intervals or anomaly frequency of a report.
    Evaluate(EvaluateArgs),
    /// Generate or load data, inject, run every detector and compare.
    Pipeline(PipelineArgs),
    /// Plot-ready CSV (and optional SVG).
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Keep only this sensor.
    #[arg(long)]
    pub sensor: Option<String>,
    #[arg(long)]
    pub magnitude_cutoff: Option<f64>,
    #[arg(long)]
    pub keep_negative: bool,
    /// Write the removal counts here instead of standard error.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub sensor: Option<String>,
    #[arg(long, default_value_t = 1440)]
    pub period: usize,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// Sensor CSV; a synthetic trace is generated when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub sensor: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    pub rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub offset_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub offset_max: f64,
    /// Synthetic trace length.
    #[arg(long, default_value_t = 3 * 1440)]
    pub length: usize,
    /// Synthetic trace period.
    #[arg(long, default_value_t = 1440)]
    pub period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Baseline,
    LowhighOnline,
    LowhighOffline,
    Gaussian,
    Sesd,
    Ldcof,
    Ensemble,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Sensor CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Sensor to score; required when the input holds several.
    #[arg(long)]
    pub sensor: Option<String>,
    /// Oxygen sensor in the input, for ldcof.
    #[arg(long)]
    pub oxygen: Option<String>,
    /// Clean training data (sensor CSV with the same sensor ids).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Labelled CSV; enables metrics.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Metrics destination; standard error when absent.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Low-high filter window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Low-high filter alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Gaussian product-window length.
    #[arg(long)]
    pub gaussian_window: Option<usize>,
    #[arg(long)]
    pub max_outliers: Option<usize>,
    #[arg(long)]
    pub significance: Option<f64>,
    #[arg(long)]
    pub period: Option<usize>,
    /// Number of k-means clusters.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub ldcof_alpha: Option<f64>,
    #[arg(long)]
    pub ldcof_beta: Option<f64>,
    /// `auto` or a number.
    #[arg(long)]
    pub threshold: Option<String>,
    /// none, month, season or weekday.
    #[arg(long)]
    pub temporal: Option<String>,
    /// Load a cluster model instead of training one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Comma-separated ensemble members.
    #[arg(long)]
    pub members: Option<String>,
    /// Comma-separated ensemble weights.
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Metrics,
    MetricsCsv,
    Faults,
    Frequency,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Report CSV written by `detect`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalKind::Metrics)]
    pub kind: EvalKind,
    /// Labelled CSV (metrics).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Fault interval in minutes.
    #[arg(long, default_value_t = 60)]
    pub fault_interval: i64,
    /// Minimum anomalies per fault interval.
    #[arg(long, default_value_t = 5)]
    pub fault_min: usize,
    /// Frequency bin width in minutes.
    #[arg(long, default_value_t = 60)]
    pub bin: i64,
    /// Start of the labelled window, `YYYY-MM-DD HH:MM:SS`.
    #[arg(long)]
    pub window_start: Option<String>,
    #[arg(long)]
    pub window_end: Option<String>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Worker threads; overrides `[pipeline] threads`.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for the generated train / test / label files.
    #[arg(long)]
    pub artifacts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Series,
    Decomposition,
    Histogram,
    ReportOverlay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Integer,
    OneDecimal,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Sensor CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub sensor: Option<String>,
    #[arg(long, default_value_t = 1440)]
    pub period: usize,
    #[arg(long, value_enum, default_value_t = RoundingArg::Integer)]
    pub rounding: RoundingArg,
    /// Report CSV for `report-overlay`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also render an SVG line chart here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::Kind::Config as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| commands::run(&cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            let e = CliError::internal("internal error");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
