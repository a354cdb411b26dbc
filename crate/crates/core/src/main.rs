use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use insider_wealth::cli::{self, Command, Overrides};

#[derive(Parser)]
#[command(
    name = "insider-wealth",
    version,
    about = "Insider portfolio experiments under anticipating integrals"
)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo estimate of expected wealth and its distribution
    Simulate(Common),
    /// Search strategy families for the optimal allocation
    Optimize(Common),
    /// Integral-equation residuals and the Girsanov identity
    Verify(Common),
    /// Stochastic dominance between the strategy and the alternative
    Dominance(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (command, common) = match args.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Optimize(c) => (Command::Optimize, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Dominance(c) => (Command::Dominance, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        n_samples: common.n,
        out: common.out,
        workers: common.workers,
    };
    let resolved = match cli::load_config(&common.config, &overrides) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match cli::run(command, &resolved) {
        Ok(summary) => {
            println!("{}", summary["results"]);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
