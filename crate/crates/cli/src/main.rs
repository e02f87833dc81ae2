//! `thermoscale`: scaling curves, temperature fits, reset simulation and
//! verification suites for thermally initialized qubit registers.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, Format, Globals};

#[derive(Parser)]
#[command(name = "thermoscale", version, about)]
struct Cli {
    /// JSON file with default values; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Largest register, in qubits, held as a dense matrix.
    #[arg(long, global = true, value_name = "QUBITS")]
    dense_cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity of an n-qubit thermal register versus n.
    ScalingCurve(ScalingCurveArgs),
    /// Fit x = βΔE to a `n,fidelity[,stderr]` CSV file.
    Fit(FitArgs),
    /// Simulate repeated conditional reset.
    ResetSim(ResetArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Tabulate the initialization + preparation bounds for a channel family.
    BoundAudit(AuditArgs),
}

#[derive(Args)]
pub struct ScalingCurveArgs {
    /// Dimensionless βΔE; give this or --eta.
    #[arg(long)]
    pub x: Option<f64>,
    /// Single-qubit error rate η in (0, 0.5].
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub n_min: Option<u64>,
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Logarithmically spaced sizes instead of every integer.
    #[arg(long)]
    pub log_grid: bool,
    /// Number of sizes on a log grid.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args)]
pub struct FitArgs {
    pub csv: Option<PathBuf>,
    /// Qubit frequency in GHz; repeat or comma-separate for per-qubit values (averaged).
    #[arg(long, value_delimiter = ',')]
    pub frequency_ghz: Vec<f64>,
    /// Weight rows by 1/stderr^2.
    #[arg(long)]
    pub weighted: bool,
    /// Also report a residual-bootstrap stderr with this many resamples.
    #[arg(long, value_name = "RESAMPLES")]
    pub bootstrap: Option<usize>,
}

#[derive(Args)]
pub struct ResetArgs {
    /// Bundled parameter set; individual flags override its fields.
    #[arg(long)]
    pub preset: Option<String>,
    /// List bundled presets and exit.
    #[arg(long)]
    pub list_presets: bool,
    #[arg(long)]
    pub n_qubits: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub p_readout: Option<f64>,
    #[arg(long)]
    pub p_gate: Option<f64>,
    #[arg(long)]
    pub delay_us: Option<f64>,
    #[arg(long)]
    pub t1_us: Option<f64>,
    #[arg(long)]
    pub x_env: Option<f64>,
    #[arg(long)]
    pub p_init: Option<f64>,
    /// Add a Monte-Carlo estimate with this many shots.
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// invariance, scaling, bounds, depolarizing, coherence, resetsim or all.
    pub suite: Option<String>,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Also fail on recorded, non-assertable findings.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct AuditArgs {
    /// unital, random-kraus or replacement.
    pub family: Option<String>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Exit 1 when the upper bound min(F_P, F_I) is violated.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, files or parameters (exit 2).
    Input(String),
    /// A computation failed (exit 3).
    Numeric(String),
}

impl From<thermoscale::Error> for CliError {
    fn from(e: thermoscale::Error) -> Self {
        use thermoscale::Error as E;
        match e {
            E::Parse { .. }
            | E::Io(_)
            | E::InvalidParameter(_)
            | E::InvalidState(_)
            | E::DimensionMismatch(_)
            | E::DimensionCap { .. }
            | E::DenseCap { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Clean,
    Violations,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let globals = Globals::resolve(cli.seed, cli.out, cli.format, cli.dense_cap, &file)?;
    match cli.command {
        Command::ScalingCurve(a) => commands::scaling_curve(&globals, a, &file.scaling_curve),
        Command::Fit(a) => commands::fit(&globals, a, &file.fit),
        Command::ResetSim(a) => commands::reset_sim(&globals, a, &file.reset_sim),
        Command::Verify(a) => commands::verify(&globals, a, &file.verify),
        Command::BoundAudit(a) => commands::bound_audit(&globals, a, &file.bound_audit),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
