use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steer::bench::{run_benchmark, threads_from_env, Suite};
use steer::run::{certify_transfer, run_transfer};
use steer::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "steer", version, about = "Minimum-energy steering of control-affine systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Output directory (defaults to the config's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of grid nodes.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Override the Picard tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one transfer.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the benchmark suite (the shipped six transfers unless a suite file is given).
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compute certificates only.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load(path: &Path, common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let config = RunConfig::from_path(path)?.with_overrides(common.grid_n, common.tol)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&config.output_dir));
    Ok((config, out))
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, common } => {
            let (config, out) = load(&config, &common)?;
            let output = run_transfer(&config, &out)?;
            let r = &output.synthesis;
            println!(
                "{} {}: energy {:.12e}, sup {:.6e}, terminal error {:.3e}, {} iteration(s)",
                output.report.status,
                config.method.as_str(),
                r.energy,
                r.sup_norm,
                r.terminal_error,
                r.iterations
            );
            if let Some(e) = &output.report.error {
                eprintln!("{e}");
            }
            Ok(output.report.exit_code)
        }
        Command::Bench { config, common } => {
            let suite = match &config {
                Some(p) => Suite::from_path(p)?,
                None => Suite::builtin(),
            };
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out/bench"));
            let outcome = run_benchmark(&suite, &out, common.grid_n, common.tol, threads_from_env())?;
            println!("{:<8}{:<12}{:>22}{:>14}{:>14}{:>6}", "problem", "method", "energy", "sup_norm", "terminal", "iter");
            for r in &outcome.rows {
                println!(
                    "{:<8}{:<12}{:>22.12e}{:>14.6e}{:>14.3e}{:>6}",
                    r.problem, r.method, r.energy, r.sup_norm, r.terminal_error, r.iterations
                );
            }
            for f in &outcome.failures {
                eprintln!("failed: {f}");
            }
            Ok(outcome.exit_code)
        }
        Command::Certify { config, common } => {
            let (config, out) = load(&config, &common)?;
            let file = certify_transfer(&config, &out)?;
            for c in &file.certificates {
                println!("{:<16} value {:.6e}  margin {:+.3e}  {}", c.kind, c.value, c.margin, if c.passed { "pass" } else { "FAIL" });
            }
            if let Some(e) = &file.synthesis_error {
                eprintln!("{e}");
            }
            Ok(if file.certificates.iter().all(|c| c.passed) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
