use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use srlasso_experiments::{parse_spec, run, run_certificates, ExperimentSpec, RunError};

#[derive(Parser)]
#[command(name = "srlasso", version, about = "Off-grid spike recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweeps described by a spec file.
    Run {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides `sweep.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run only the certificate scans of a spec file.
    Certificate {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_spec(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        RunError::Spec(_) => ExitCode::from(1),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec, out, threads, seed } => {
            let mut spec = match load(&spec) {
                Ok(s) => s,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(1);
                }
            };
            if let (Some(seed), Some(sweep)) = (seed, spec.sweep.as_mut()) {
                sweep.seed = seed;
            }
            match run(&spec, &out, threads) {
                Ok(report) if report.not_converged_cells > 0 => {
                    eprintln!("warning: {} cells did not converge", report.not_converged_cells);
                    ExitCode::from(2)
                }
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Certificate { spec, out, threads } => {
            let spec = match load(&spec) {
                Ok(s) => s,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(1);
                }
            };
            match run_certificates(&spec, &out, threads) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    }
}
