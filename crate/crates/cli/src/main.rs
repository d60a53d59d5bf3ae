use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use deconv_cli::{check, commands};

/// Density deconvolution when the error characteristic function has real zeros.
#[derive(Debug, Parser)]
#[command(name = "deconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the kernel and its derivatives, or the deconvolution kernels.
    Kernel(commands::KernelArgs),
    /// Zero-set coefficients C_l^+ and C_l^- for an error law.
    Coeffs(commands::CoeffsArgs),
    /// Estimate the density of X from a sample of Y = X + error.
    Estimate(commands::EstimateArgs),
    /// Run a Monte Carlo rate experiment.
    Simulate(commands::SimulateArgs),
    /// Run the built-in oracle checks.
    Check,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Kernel(a) => commands::kernel(&a),
        Command::Coeffs(a) => commands::coeffs(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Check => {
            let results = check::run_checks()?;
            for r in &results {
                println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            let failed = results.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                bail!("{failed} check(s) failed");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
