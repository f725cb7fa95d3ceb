use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hrrpgraphnet::data::NormMode;
use hrrpgraphnet::Error;

mod commands;
mod config;

/// Radar range-profile recognition with a graph network.
#[derive(Parser, Debug)]
#[command(name = "hrrpgraphnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic train/test pair (train.csv, test.csv and manifests).
    GenData(GenDataArgs),
    /// Train one model; writes model.ckpt, epochs.csv and config.json.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset CSV.
    Eval(EvalArgs),
    /// Train all seven module combinations and tabulate test metrics.
    Ablate(AblateArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Generator spec JSON; the built-in 3-class benchmark when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Samples per class in each of the train and test sets.
    #[arg(long, default_value_t = 300)]
    per_class: usize,
    #[arg(long, default_value_t = 501)]
    n_cells: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-profile normalization: max_abs, l2 or none.
    #[arg(long, default_value = "max_abs")]
    normalize: NormMode,
    #[arg(long)]
    out: PathBuf,
}

/// Settings shared by `train` and `ablate`.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON file with optional `model` and `train` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set train.batch_size=16`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    d_out: Option<usize>,
    #[arg(long)]
    g_out: Option<usize>,
    /// Seeds both the initialization and the batch shuffling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// A directory with train.csv (and optionally test.csv for validation),
    /// or a single training CSV.
    #[arg(long)]
    data: PathBuf,
    /// Active modules, a subset of "abc".
    #[arg(long)]
    ablation: Option<String>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory for the metrics CSVs; defaults to the checkpoint's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    /// Directory with train.csv and test.csv.
    #[arg(long)]
    data: PathBuf,
    /// Seeds per configuration.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One layer (conv1d, batchnorm-train, batchnorm-eval, leaky-relu,
    /// graphconv, attention, mean-pool, dense) or `model`; all when omitted.
    #[arg(long)]
    layer: Option<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Config(_) => 2,
        Error::Parse { .. } | Error::Format(_) | Error::Io { .. } | Error::Json(_) | Error::Shape { .. } => 3,
        Error::Numeric(_) => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_target(false)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
