//! `chanpred`: train the slot-ahead channel predictor, evaluate link
//! metrics, count model complexity and regenerate LDPC assets.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 checkpoint mismatch, 1 anything else.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chanpred_core::Error;
use clap::{Parser, Subcommand, ValueEnum};

pub const OUT_DIR_ENV: &str = "CHANPRED_OUT_DIR";

#[derive(Parser)]
#[command(name = "chanpred", version, about = "NTN uplink link simulator with CNN-LSTM channel prediction")]
struct Cli {
    /// Worker threads (1 gives bit-reproducible runs; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the predictor and write a checkpoint, a per-epoch log and a manifest.
    Train(TrainArgs),
    /// Run Monte Carlo link evaluation over an Eb/N0 grid and a curve family.
    Eval(EvalArgs),
    /// Print per-layer multiplications and parameter counts.
    Complexity(ComplexityArgs),
    /// Regenerate the rate-3/4 LDPC parity-check matrices as alist files.
    GenLdpc(GenLdpcArgs),
}

#[derive(clap::Args)]
pub struct TrainArgs {
    /// TOML training configuration (defaults used when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $CHANPRED_OUT_DIR or ./runs).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Training and validation batch size.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint file name inside the output directory.
    #[arg(long, default_value = "checkpoint.json")]
    pub checkpoint_name: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Ebn0,
    Speed,
    Mod,
    Channel,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    /// TOML scenario configuration (defaults used when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Predictor checkpoint; without one the pilot-free slot reuses the
    /// previous slot's estimate.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Curve family.
    #[arg(long, value_enum, default_value = "ebn0")]
    pub axis: Axis,
    /// Axis values as `start:stop:step` or a comma list (Eb/N0 in dB,
    /// speeds in km/h, or modulation orders).
    #[arg(long)]
    pub values: Option<String>,
    /// Eb/N0 grid for non-Eb/N0 axes (default: the config's single value).
    #[arg(long)]
    pub ebn0: Option<String>,
    /// Checkpoint trained on NTN-TDL-A (channel axis).
    #[arg(long)]
    pub train_ckpt_a: Option<PathBuf>,
    /// Checkpoint trained on NTN-TDL-C (channel axis).
    #[arg(long)]
    pub train_ckpt_c: Option<PathBuf>,
    /// Override the maximum Monte Carlo iterations per point.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Override the seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: $CHANPRED_OUT_DIR or ./runs).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Prefix for produced files.
    #[arg(long, default_value = "eval")]
    pub name: String,
}

#[derive(clap::Args)]
pub struct ComplexityArgs {
    /// Count the built-in architecture.
    #[arg(long, conflicts_with_all = ["checkpoint", "arch"])]
    pub default_arch: bool,
    /// Count the architecture stored in a checkpoint.
    #[arg(long, conflicts_with = "arch")]
    pub checkpoint: Option<PathBuf>,
    /// JSON list of `{spec, input}` layers.
    #[arg(long)]
    pub arch: Option<PathBuf>,
    /// Fail unless totals are 156,576 multiplications and 5,806 parameters.
    #[arg(long)]
    pub assert_paper: bool,
    /// Where to write the JSON report (default: <out-dir>/complexity.json).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Output directory (default: $CHANPRED_OUT_DIR or ./runs).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct GenLdpcArgs {
    /// Codeword lengths to generate (default: the shipped set).
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<usize>,
    /// Output directory (default: $CHANPRED_OUT_DIR or ./runs).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Usage(_) => 2,
        Error::NonFinite { .. } => 3,
        Error::ArchitectureMismatch(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Train(a) => commands::train(a, cli.threads),
        Command::Eval(a) => commands::eval(a, cli.threads),
        Command::Complexity(a) => commands::complexity(a, cli.threads),
        Command::GenLdpc(a) => commands::gen_ldpc(a, cli.threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
