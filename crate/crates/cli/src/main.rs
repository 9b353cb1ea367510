//! `riskcast`: generate data, train, evaluate, predict, compare and
//! gradient-check volatility-risk models.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riskcast_core::Error;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  check failed (gradcheck above tolerance) or unexpected error
  2  usage or parameter error
  3  schema, data or model-file error
  4  numerical error
  5  I/O error";

/// Default seed for `gen-data`; matches the generator's own default.
pub const DEFAULT_DATA_SEED: u64 = 7;
/// Default seed for `train`.
pub const DEFAULT_TRAIN_SEED: u64 = 42;
/// Default seed for `gradcheck`.
pub const DEFAULT_CHECK_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "riskcast", version, about = "Financial risk forecasting with a conv/LSTM hybrid", after_help = EXIT_CODES)]
pub struct RunConfig {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (market, financial, macro, news, policy CSVs and manifest.json).
    #[command(after_help = EXIT_CODES)]
    GenData(GenDataArgs),
    /// Build features, train a model with early stopping and save it.
    #[command(after_help = EXIT_CODES)]
    Train(TrainArgs),
    /// Report MSE, accuracy and R² on the test block of the chronological split.
    #[command(after_help = EXIT_CODES)]
    Evaluate(EvaluateArgs),
    /// Write `date,risk_score` for every admissible window.
    #[command(after_help = EXIT_CODES)]
    Predict(PredictArgs),
    /// Side-by-side test metrics for two or more models trained on the same split.
    #[command(after_help = EXIT_CODES)]
    Compare(CompareArgs),
    /// Finite-difference gradient check of a tiny hybrid model.
    #[command(after_help = EXIT_CODES)]
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of business days (at least 200).
    #[arg(long, default_value_t = 2000)]
    pub days: usize,
    #[arg(long, default_value_t = DEFAULT_DATA_SEED)]
    pub seed: u64,
    /// Coupling of news mood to volatility; 0 removes the signal.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Base daily return volatility.
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Daily probability of a volatility regime switch.
    #[arg(long)]
    pub regime_prob: Option<f64>,
    /// Make the mood effect independent of the price trend.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding the dataset CSVs.
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Epoch log CSV; defaults to `<model>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Train this baseline instead of the hybrid model.
    #[arg(long, value_parser = ["linreg"])]
    pub baseline: Option<String>,
    /// Hyperparameter grid, e.g. `--grid lr=0.001,0.01 hidden=16,32`.
    #[arg(long, num_args = 1.., value_name = "KEY=V1,V2")]
    pub grid: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_TRAIN_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Days per input window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Days ahead the target volatility is measured over.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Class boundary for accuracy, on the normalized target scale.
    #[arg(long, default_value_t = riskcast_core::eval::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model files (two or more). Rows are named after the file stem.
    #[arg(long = "model", required = true, num_args = 1..)]
    pub models: Vec<PathBuf>,
    #[arg(long, default_value_t = riskcast_core::eval::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Also write the comparison as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = DEFAULT_CHECK_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Fail threshold on the maximum relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Test hook: corrupt the analytic gradient of parameters with this prefix (conv, lstm, head).
    #[arg(long)]
    pub break_layer: Option<String>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) => 2,
        Error::Numerical(_) | Error::UndefinedR2 => 4,
        Error::Io { .. } => 5,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let level = match (cfg.quiet, cfg.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = match &cfg.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Predict(a) => commands::predict(a),
        Command::Compare(a) => commands::compare(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
