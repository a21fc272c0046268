use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geodequiv_cli::registry::listing;
use geodequiv_cli::{run_scenario, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "geodequiv", version, about = "Numerical checks for geodesically equivalent metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file. Exit status: 0 pass, 1 check failure, 2 configuration error.
    Run {
        scenario: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace every seed in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Multiply every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Comma-separated check ids to run.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        /// Override the number of sampled points.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Print every registered check.
    ListChecks,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListChecks => {
            print!("{}", listing());
            ExitCode::SUCCESS
        }
        Command::Run { scenario, out, seed, tol_scale, checks, points, quiet } => {
            let ov = Overrides { seed, tol_scale, checks, points };
            let report = match Scenario::load(&scenario).and_then(|s| run_scenario(&s, &ov)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, report.to_json()) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if !quiet {
                print!("{}", report.table());
            }
            if report.overall_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
