use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "jsccguard", about = "OFDM DeepJSCC link simulator with a preamble-perturbation defense", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub(crate) struct Common {
    /// Line-oriented `key = value` configuration file.
    #[arg(long)]
    pub(crate) config: Option<PathBuf>,
    /// Overrides every seed found in the config.
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub(crate) out: PathBuf,
    /// Comma-separated SNR list in dB; overrides `exp.snr_db`.
    #[arg(long, value_delimiter = ',')]
    pub(crate) snr_db: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic desk-scale datasets as IDX files.
    Dataset {
        #[command(flatten)]
        common: Common,
        /// Training images to generate.
        #[arg(long, default_value_t = 2000)]
        train_count: usize,
        /// Held-out images to generate.
        #[arg(long, default_value_t = 500)]
        test_count: usize,
    },
    /// Train the JSCC models end to end through the simulated link.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Optimize a defense perturbation codebook (or a single perturbation).
    GuardGen {
        #[command(flatten)]
        common: Common,
    },
    /// Train an eavesdropper surrogate decoder (semi-white-box or black-box).
    AttackTrain {
        #[command(flatten)]
        common: Common,
    },
    /// Run an attack/defense evaluation and write the CSV report.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Run the fast numerical invariant suite and print one line per check.
    Loopback {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dataset { common, train_count, test_count } => {
            commands::dataset(&common, train_count, test_count)
        }
        Command::Train { common } => commands::train(&common),
        Command::GuardGen { common } => commands::guard_gen(&common),
        Command::AttackTrain { common } => commands::attack_train(&common),
        Command::Eval { common } => commands::eval(&common),
        Command::Loopback { common } => commands::loopback(&common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
