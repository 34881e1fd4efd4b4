//! `shortdot`: encode matrices, decode worker outputs, and run the latency
//! experiments from the command line.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{exit_code, Settings};

#[derive(Parser, Debug)]
#[command(name = "shortdot", version, about = "Short-Dot coded linear transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonArgs,
}

/// Flags shared by every subcommand. Each may also be set in the config
/// file; flags win.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Number of processors.
    #[arg(long, global = true)]
    pub p: Option<usize>,
    /// Recovery threshold, or "auto" to minimize the expected time.
    #[arg(long, global = true)]
    pub k: Option<String>,
    /// Number of dot products (rows of A).
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Input length (columns of A).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Straggling parameter of the shifted-exponential model.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Monte-Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated strategy names.
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    /// Target row length for block strategies.
    #[arg(long, global = true)]
    pub s: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode the matrix in a CSV file into per-worker sparse rows.
    Encode {
        /// M x N matrix A.
        #[arg(long)]
        a: Option<std::path::PathBuf>,
        /// "chebyshev" (default) or "gaussian" (seeded by --seed).
        #[arg(long)]
        generator: Option<String>,
    },
    /// Compute A x from an encoded directory using a set of responders.
    Transform {
        /// Directory written by `encode`.
        #[arg(long)]
        code: Option<std::path::PathBuf>,
        /// Input vector, one row or one column.
        #[arg(long)]
        x: Option<std::path::PathBuf>,
        /// 1-based worker indices in finishing order, e.g. "3,1,5" or "2-6".
        #[arg(long)]
        responders: Option<String>,
        /// Decode from all outputs, correcting up to this many wrong ones.
        #[arg(long)]
        max_errors: Option<usize>,
        /// 1-based workers whose outputs are corrupted before decoding.
        #[arg(long)]
        corrupt: Option<String>,
    },
    /// Expected finish time of each strategy over a range of M.
    Sweep {
        /// Inclusive range "a-b" of M values (default 1-P).
        #[arg(long)]
        m_range: Option<String>,
    },
    /// Speed-up of Short-Dot as P grows with M = round(P / ln P).
    Theorem4 {
        /// Comma-separated processor counts.
        #[arg(long)]
        p_values: Option<String>,
    },
    /// Sparsity lower bounds and, given A, the achieved sparsity.
    Bounds {
        #[arg(long)]
        a: Option<std::path::PathBuf>,
    },
    /// Simulated 20-processor comparison of Short-Dot, uncoded and MDS.
    #[command(name = "experiment-sec6")]
    ExperimentSec6,
    /// Quick end-to-end checks of the installation.
    Selftest,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::load(&cli.common)?;
    match cli.command {
        Command::Encode { a, generator } => commands::encode(&settings, a, generator),
        Command::Transform { code, x, responders, max_errors, corrupt } => {
            commands::transform(&settings, code, x, responders, max_errors, corrupt)
        }
        Command::Sweep { m_range } => commands::sweep(&settings, m_range),
        Command::Theorem4 { p_values } => commands::theorem4(&settings, p_values),
        Command::Bounds { a } => commands::bounds(&settings, a),
        Command::ExperimentSec6 => commands::experiment_sec6(&settings),
        Command::Selftest => commands::selftest(&settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
