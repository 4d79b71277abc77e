use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::Failure;

/// Provider-selection experiments: scenario runs, sweeps, ledger operations
/// and welfare statistics.
#[derive(Parser, Debug)]
#[command(name = "bandsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON run configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration (see `bandsim presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory; created if missing. Without it the main artifact
    /// goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed. Drawn from entropy and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for independent iterations or repetitions.
    #[arg(long, value_name = "N")]
    pub parallel: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every policy over the same seeded traces and compare welfare.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policy names, e.g. `eu,history,rl,lowest-price,random`.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<String>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Also write the per-decision `steps.csv`.
        #[arg(long)]
        steps: bool,
    },
    /// Compare windowed history estimators against unlimited history.
    TuneHistory {
        #[command(flatten)]
        common: Common,
        /// Window lengths; `unlimited` is always the baseline.
        #[arg(long, value_delimiter = ',', default_value = "unlimited,1,2,3,4")]
        windows: Vec<String>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Learning UEs against a deterministic capacity table.
    Testbed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Allocation success as a function of random training length.
    TrainingSweep {
        #[command(flatten)]
        common: Common,
        /// Training lengths to evaluate.
        #[arg(long = "s", value_delimiter = ',', default_value = "2,4,6,8")]
        training_steps: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        repetitions: usize,
    },
    /// Spectrum-market ledger operations.
    Ledger {
        #[command(subcommand)]
        action: LedgerAction,
    },
    /// Paired t-tests over an existing welfare CSV.
    Stats {
        /// `welfare.csv` written by `simulate` or `tune-history`.
        #[arg(long)]
        welfare: PathBuf,
        /// Policy compared against the others; defaults to ExpectedUtility
        /// when present, else the first policy.
        #[arg(long)]
        policy: Option<String>,
        /// Restrict to these baselines.
        #[arg(long, value_delimiter = ',')]
        baselines: Vec<String>,
    },
    /// List built-in configurations or print one as JSON.
    Presets { name: Option<String> },
}

#[derive(Subcommand, Debug)]
enum LedgerAction {
    /// Apply transaction payloads (JSON array or one object per line).
    Exec {
        payloads: PathBuf,
        /// Accounts allowed to mint and redeem tokens.
        #[arg(long, value_delimiter = ',', default_value = "exchange")]
        trusted: Vec<String>,
        /// Replay this JSONL log before applying the payloads.
        #[arg(long)]
        log_in: Option<PathBuf>,
        /// Write the full transaction log here as JSONL.
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("BANDSIM_LOG", "warn");
    env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            common,
            policies,
            iterations,
            steps,
        } => commands::simulate(&common, &policies, iterations, steps),
        Command::TuneHistory {
            common,
            windows,
            iterations,
        } => commands::tune(&common, &windows, iterations),
        Command::Testbed {
            common,
            repetitions,
        } => commands::testbed(&common, repetitions),
        Command::TrainingSweep {
            common,
            training_steps,
            repetitions,
        } => commands::sweep(&common, &training_steps, repetitions),
        Command::Ledger {
            action:
                LedgerAction::Exec {
                    payloads,
                    trusted,
                    log_in,
                    log_out,
                },
        } => commands::ledger_exec(&payloads, &trusted, log_in.as_deref(), log_out.as_deref()),
        Command::Stats {
            welfare,
            policy,
            baselines,
        } => commands::stats(&welfare, policy.as_deref(), &baselines),
        Command::Presets { name } => commands::presets(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
