use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use homwave::commands::{self, Overrides};
use homwave::Reference;

#[derive(Debug, Parser)]
#[command(name = "homwave", version)]
#[command(
    about = "dyadic cubes, splines, wavelets and H1 experiments on finite metric measure spaces"
)]
struct Cli {
    /// JSON run config; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Use a built-in reference space instead of the configured one.
    #[arg(long, global = true, value_enum)]
    reference: Option<Reference>,

    /// Scale ratio δ in (0, 1).
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Enforce δ ≤ 1/96 and the sharp cube sandwich.
    #[arg(long, global = true)]
    strict_delta: bool,

    /// Monte Carlo samples per spline level.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Seed for the lattice, the splines and the experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build nets, cubes, splines and the wavelet basis.
    Build,
    /// Run every check on the built artifacts; exits 1 if a pass-class check fails.
    Verify,
    /// Norms of a function given one value per line.
    Analyze {
        #[arg(long)]
        function: PathBuf,
    },
    /// Molecular decomposition of a function given one value per line.
    Decompose {
        #[arg(long)]
        function: PathBuf,
    },
    /// Print a stored report and refresh its CSV table.
    Report,
    /// Estimate the splines only.
    Splines,
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let overrides = Overrides {
        reference: cli.reference,
        delta: cli.delta,
        strict_delta: cli.strict_delta,
        samples: cli.samples,
        seed: cli.seed,
        out: cli.out,
    };
    let cfg = commands::resolve(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Build => {
            let m = commands::cmd_build(&cfg)?;
            println!(
                "built {} points, levels {}..={}, {} wavelets -> {}",
                m.space.len(),
                m.basis.k_min(),
                m.basis.k_max(),
                m.basis.len(),
                cfg.out.display()
            );
        }
        Command::Verify => {
            let report = commands::cmd_verify(&cfg)?;
            print!("{}", report.summary());
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Analyze { function } => {
            let a = commands::cmd_analyze(&cfg, &function)?;
            println!("{}", serde_json::to_string_pretty(&a)?);
        }
        Command::Decompose { function } => {
            let d = commands::cmd_decompose(&cfg, &function)?;
            println!(
                "{} pieces, sum of lambda {:.6e}, resynthesis error {:.3e}",
                d.pieces.len(),
                d.lambda_sum,
                d.reconstruction_error
            );
        }
        Command::Report => {
            let report = commands::cmd_report(&cfg)?;
            print!("{}", report.summary());
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Splines => {
            commands::cmd_splines(&cfg)?;
            println!("splines written to {}", cfg.out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
