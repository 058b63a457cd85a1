use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use varigeo::cli::{self, Command, Options};

#[derive(Parser)]
#[command(
    name = "varigeo",
    version,
    about = "Geometric formulations of constrained variational problems"
)]
struct Args {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Problem file (TOML).
    file: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the numeric zero test.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample points per numeric zero test.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Build the pipeline's forms and solve for the dynamics.
    Derive(Common),
    /// Report structure flags of the Lagrangian.
    Classify(Common),
    /// Integrate the dynamics and write a trajectory CSV.
    Integrate {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check equivalence and projection theorems on the problem.
    Verify(Common),
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (command, common, csv) = match args.command {
        Sub::Derive(c) => (Command::Derive, c, None),
        Sub::Classify(c) => (Command::Classify, c, None),
        Sub::Integrate { common, csv } => (Command::Integrate, common, csv),
        Sub::Verify(c) => (Command::Verify, c, None),
    };
    let opts = Options {
        seed: common.seed,
        trials: common.trials,
        csv,
    };
    let outcome = match cli::run(command, &common.file, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("varigeo: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes") + "\n";
    let written = match &common.out {
        Some(path) => std::fs::write(path, json),
        None => {
            print!("{json}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("varigeo: {e}");
        return ExitCode::from(cli::EXIT_OTHER as u8);
    }
    if outcome.exit_code != cli::EXIT_OK {
        eprintln!("varigeo: {}", outcome.report.status);
    }
    ExitCode::from(outcome.exit_code as u8)
}
