//! `mllkm`: train, predict, benchmark and generate synthetic data.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mllkm::kernels::{GammaGrid, MapFamily, MapScope};

#[derive(Debug, Parser)]
#[command(name = "mllkm", version, about = "Multiple locally linear kernel machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it as JSON.
    Train(TrainCmd),
    /// Score a data file with a trained model.
    Predict(PredictCmd),
    /// Repeated random train/test splits.
    Bench(BenchCmd),
    /// Write a synthetic two-class set with a piecewise linear boundary.
    Synth(SynthCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Libsvm,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Linear,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input data file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "libsvm")]
    format: Format,
    /// 0-based label column for CSV input.
    #[arg(long)]
    label_column: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "gauss", value_parser = parse_family)]
    family: MapFamily,
    /// `global` or `component`.
    #[arg(long, default_value = "global", value_parser = parse_scope)]
    scope: MapScope,
    /// Log-spaced bandwidth grid as `lo:hi:count`.
    #[arg(long, default_value = "0.01:10:5", value_parser = parse_gammas)]
    gammas: GammaGrid,
    #[arg(long = "C", default_value_t = 100.0)]
    c: f64,
    /// Inner solver epochs per call.
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Gram matrices held in memory at most.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Kernels inserted per outer iteration at most.
    #[arg(long, default_value_t = 8)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    standardize: Switch,
    /// Re-scan pruned kernels until the exact certificate holds.
    #[arg(long, value_enum, default_value = "off")]
    reprocess: Switch,
}

#[derive(Debug, Args)]
struct TrainCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Model output path.
    #[arg(long)]
    out: PathBuf,
    /// Training log, one JSON object per outer iteration.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Exit non-zero when the solver does not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct PredictCmd {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Predictions output, `<score>\t<label>` per line.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value_t = 0.7)]
    train_frac: f64,
    /// Also benchmark a linear-kernel SVM.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// Per-split CSV for the MLLKM runs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-split CSV for the baseline runs.
    #[arg(long)]
    baseline_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthCmd {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    segments: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_family(s: &str) -> Result<MapFamily, String> {
    s.parse().map_err(|e: mllkm::Error| e.to_string())
}

fn parse_scope(s: &str) -> Result<MapScope, String> {
    s.parse().map_err(|e: mllkm::Error| e.to_string())
}

fn parse_gammas(s: &str) -> Result<GammaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("expected lo:hi:count, got `{s}`"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("invalid number `{t}`"));
    let count: usize = count.trim().parse().map_err(|_| format!("invalid count `{count}`"))?;
    GammaGrid::log_spaced(num(lo)?, num(hi)?, count).map_err(|e| e.to_string())
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("MLLKM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("MLLKM_THREADS must be a positive integer, got `{value}`"))?;
    if n == 0 {
        bail!("MLLKM_THREADS must be a positive integer, got `{value}`");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::Train(cmd) => commands::train(&cmd),
        Command::Predict(cmd) => commands::predict(&cmd),
        Command::Bench(cmd) => commands::bench(&cmd),
        Command::Synth(cmd) => commands::synth(&cmd),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
