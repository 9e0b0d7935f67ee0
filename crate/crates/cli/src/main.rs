use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conelab_cli::commands::{cmd_harmonic, cmd_sample, cmd_survival, cmd_verify};
use conelab_cli::{CliError, LoadedConfig};

#[derive(Parser, Debug)]
#[command(name = "conelab", version, about = "Random walks killed at the boundary of polynomial cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Survival curves P(τ_x > n) for every start.
    Survival(Common),
    /// The harmonic function V on a grid of points.
    Harmonic(Common),
    /// Exponent, shape and cross-validation checks; exit code 3 on FAIL.
    Verify(Common),
    /// Conditioned or h-transform trajectories.
    Sample(Common),
}

#[derive(clap::Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: the config's `out`, else out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (Command::Survival(args) | Command::Harmonic(args) | Command::Verify(args) | Command::Sample(args)) =
        &cli.command;
    let mut cfg = LoadedConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.config.seed = seed;
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        cfg.config.workers = w;
    }
    let out = args.out.as_deref();
    match &cli.command {
        Command::Survival(_) => cmd_survival(&cfg, out),
        Command::Harmonic(_) => cmd_harmonic(&cfg, out),
        Command::Verify(_) => cmd_verify(&cfg, out),
        Command::Sample(_) => cmd_sample(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("conelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
