use std::path::PathBuf;
use std::process::ExitCode;

use barankin_cli::{run, Command, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "barankin", version, about = "Barankin lower bounds for unbiased estimation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Report path (default: [output].path or <out dir>/<command>_report.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count override.
    #[arg(long)]
    samples: Option<usize>,
    /// PSD tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bound V (and W with an A matrix) for a fixed test set.
    Bound(Common),
    /// Greedy search for the supremum over test sets.
    Search(Common),
    /// Efficiency certificate for the constructed estimator.
    Certify(Common),
    /// Cramer-Rao limit of the bound.
    Crb(Common),
    /// Compare an estimator's covariance against the bound.
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, c) = match cli.cmd {
        Cmd::Bound(c) => (Command::Bound, c),
        Cmd::Search(c) => (Command::Search, c),
        Cmd::Certify(c) => (Command::Certify, c),
        Cmd::Crb(c) => (Command::Crb, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let ov = Overrides {
        seed: c.seed,
        samples: c.samples,
        tol: c.tol,
    };
    match run(cmd, &c.config, c.out.as_deref(), &ov) {
        Ok((path, outcome)) => {
            if !c.quiet {
                for w in &outcome.report.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
