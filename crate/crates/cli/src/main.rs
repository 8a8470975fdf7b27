//! `teesn`: data generation, training, prediction, evaluation, memory
//! capacity, hyperparameter search, encoding curves and scaling benchmarks.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use teesn::model::Ablation;

#[derive(Debug, Parser)]
#[command(name = "teesn", version, about = "Time-encoding echo state networks for irregularly sampled time series")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "TEESN_OUT", default_value = "teesn-out")]
    pub out: PathBuf,
    /// Global seed; drawn and recorded when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run every data-parallel loop sequentially.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark dataset.
    Generate {
        #[command(subcommand)]
        what: Generate,
    },
    /// Train a model and write `model.json` and `train_report.json`.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Predict after the training range with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Start of the prediction range; defaults to the end of training.
        #[arg(long)]
        from: Option<f64>,
    },
    /// Score a saved model, or cross-validate model variants.
    Evaluate {
        /// Saved model to score; without it, variants are cross-validated.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Samples to score with `--model`.
        #[arg(long, value_enum, default_value_t = Range::Test)]
        range: Range,
        #[arg(long = "variant", value_enum)]
        variants: Vec<Variant>,
        /// Number of seeds (`seed, seed+1, ...`) for cross-validation.
        #[arg(long, default_value_t = 1)]
        repeats: u64,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model_args: ModelArgs,
    },
    /// Memory capacity of model variants.
    Mc {
        #[arg(long = "variant", value_enum)]
        variants: Vec<Variant>,
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Genetic-algorithm hyperparameter search.
    Search {
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Dot product versus distance curves of the time encoding.
    Curve {
        /// Number of frequency bases; one CSV per value.
        #[arg(long = "k")]
        ks: Vec<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        max_time: Option<f64>,
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Wall-time scaling of the state loop in observations and neurons.
    Bench {
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Generate {
    /// Irregularly sampled Mackey-Glass series (`mg.csv`, `mg.meta.json`).
    Mg {
        /// Observations to keep; also the minimum integration length.
        #[arg(long)]
        length: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    /// Forecast the generated Mackey-Glass series.
    Mg,
    Forecast,
    EarlyPredict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Range {
    Train,
    Test,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    TeEsn,
    Esn,
    NoTe,
    NoLs,
    NoSf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TeMode {
    Off,
    TimeVector,
    MultiFrequency,
}

#[derive(Debug, Default, Args)]
pub struct DataArgs {
    /// Long-format CSV (`series_id,time,value`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Teacher-signal CSV (`time,target`).
    #[arg(long)]
    pub targets: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    /// Series index to forecast.
    #[arg(long)]
    pub series: Option<usize>,
    /// Early-prediction horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub input_scale: Option<f64>,
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long)]
    pub spectral_radius: Option<f64>,
    #[arg(long)]
    pub leaky_rate: Option<f64>,
    #[arg(long)]
    pub fusion_rate: Option<f64>,
    #[arg(long)]
    pub long_skip: Option<usize>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, value_enum)]
    pub te_mode: Option<TeMode>,
    #[arg(long)]
    pub te_dim: Option<usize>,
    /// Remove a mechanism: no-te, no-ls or no-sf. Repeatable.
    #[arg(long = "ablate")]
    pub ablate: Vec<Ablation>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
