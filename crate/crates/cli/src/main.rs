//! `sdof`: reproducible runs of the secure-DoF computations.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "sdof", version, about = "Secure degrees of freedom: formulas, audits and simulations")]
struct Cli {
    /// JSON file with default values for any flag (snake_case keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Best layered-scheme DoF over a grid of sqrt(ab), as CSV.
    Sweep(SweepFlags),
    /// f(Q) next to its Gaussian bound, as CSV.
    Fq(FqFlags),
    /// Maximise the equal-gain secrecy objective over binary inputs.
    Theorem6(Theorem6Flags),
    /// Structured and Gaussian secrecy-rate curves against power, as CSV.
    Rates(RatesFlags),
    /// Monte Carlo of the layered encoding and successive decoding chain.
    Simulate(SimulateFlags),
    /// Secrecy rate of the complex channel and its DoF trend.
    Complex(ComplexFlags),
    /// Write a gnuplot script for a CSV produced by sweep, fq or rates.
    Plotscript(PlotscriptFlags),
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    #[default]
    Eq36,
    Eq53,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Sweep,
    Fq,
    Rates,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Args, Serialize, Debug)]
pub struct SweepFlags {
    #[arg(long = "sqrt-ab-min", visible_alias = "ab-min")]
    #[serde(skip_serializing_if = "Option::is_none")]
    sqrt_ab_min: Option<f64>,
    #[arg(long = "sqrt-ab-max", visible_alias = "ab-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    sqrt_ab_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qmax: Option<u64>,
    /// Which variant supplies the best_p, best_q, best_gamma columns.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<VariantArg>,
    /// Output CSV; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct FqFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qmax: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct Theorem6Flags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct RatesFlags {
    /// Comma-separated, strictly ascending.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    powers: Option<Vec<f64>>,
    #[arg(long = "sqrt-ab")]
    #[serde(skip_serializing_if = "Option::is_none")]
    sqrt_ab: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct SimulateFlags {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    layers: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    backoff: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Force the receiver noise to zero.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    noiseless: bool,
    /// Continue from the true remainder after a layer error.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    genie: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct ComplexFlags {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct PlotscriptFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<PlotKind>,
    /// Defaults to the CSV path with a `.gp` extension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SDOF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("SDOF_THREADS must be a nonnegative integer, got {v:?}")))?;
    #[cfg(feature = "parallel")]
    if n > 0 {
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let config = cli.config.as_deref().map(config::load).transpose()?;
    let ctx = commands::Ctx {
        config,
        exec: if cli.sequential {
            sdof_core::Exec::Sequential
        } else {
            sdof_core::Exec::default()
        },
    };
    match cli.command {
        Command::Sweep(f) => commands::sweep(&ctx, &f),
        Command::Fq(f) => commands::fq(&ctx, &f),
        Command::Theorem6(f) => commands::theorem6(&ctx, &f),
        Command::Rates(f) => commands::rates(&ctx, &f),
        Command::Simulate(f) => commands::simulate(&ctx, &f),
        Command::Complex(f) => commands::complex(&ctx, &f),
        Command::Plotscript(f) => commands::plotscript(&ctx, &f),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
