//! `tmla`: run time-modulated array direction-finding experiments from
//! scenario files.
//!
//! Exit codes: 0 success, 2 configuration or validation error (report as
//! JSON on stderr), 3 runtime error. Log level comes from `RUST_LOG`.

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{SimulateArgs, SnapshotsArgs, SweepArgs};

#[derive(Parser)]
#[command(
    name = "tmla",
    version,
    about = "Single-channel DOA estimation with a time-modulated linear array"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario end to end and write spectrum, snapshots and result.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Noise seed; defaults to the scenario's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Ignore the scenario's SNR and run without noise.
        #[arg(long)]
        noiseless: bool,
        /// Also write the per-element signals as signals.bin + signals.json.
        #[arg(long)]
        dump_signals: bool,
    },
    /// Monte Carlo RMSE over a grid of one scenario parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// snr_db, window_count, window_stride, sample_rate or harmonic_orders.
        #[arg(long)]
        param: String,
        /// Comma-separated cell values; harmonic_orders cells join orders with '+', e.g. "1,1+3".
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct snapshots only and compare them with the analytic oracle.
    Snapshots {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        noiseless: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Simulate {
            config,
            out,
            seed,
            noiseless,
            dump_signals,
        } => commands::simulate(&SimulateArgs {
            config,
            out,
            seed,
            noiseless,
            dump_signals,
        }),
        Command::Sweep {
            config,
            param,
            values,
            trials,
            out,
        } => commands::sweep(&SweepArgs {
            config,
            param,
            values,
            trials,
            out,
        }),
        Command::Snapshots {
            config,
            out,
            noiseless,
        } => commands::snapshots(&SnapshotsArgs {
            config,
            out,
            noiseless,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
