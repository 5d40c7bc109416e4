use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxsaf_cli::{run, Command, Invocation, Overrides, Status};

#[derive(Parser)]
#[command(
    name = "proxsaf",
    version,
    about = "Sparse-aware subband adaptive filter experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte-Carlo MSD curves, one CSV per algorithm.
    Simulate(Args),
    /// Theoretical MSD/EMSE curves and step-size bounds.
    Theory(Args),
    /// Simulation and theory side by side with their largest deviation.
    Compare(Args),
    /// Delayless echo cancellation with ERLE curves.
    Aec(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment definition (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads for Monte-Carlo trials (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
}

const EXIT_ERROR: u8 = 1;
const EXIT_DIVERGED: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROXSAF_LOG", "warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Theory(a) => (Command::Theory, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Aec(a) => (Command::Aec, a),
    };
    let inv = Invocation {
        command,
        config: args.config,
        out: args.out,
        overrides: Overrides {
            seed: args.seed,
            trials: args.trials,
        },
        workers: args.workers.map(|w| w as usize),
    };
    match run(&inv) {
        Ok((status, report)) => {
            print!("{}", report.summary);
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            match status {
                Status::Ok => ExitCode::SUCCESS,
                Status::Diverged => {
                    eprintln!(
                        "error: divergence in {} trial(s)",
                        report.divergence.values().sum::<usize>()
                    );
                    ExitCode::from(EXIT_DIVERGED)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
