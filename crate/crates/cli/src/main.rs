//! `fstchain`: batch driver writing result JSON and plot-ready CSV files.

mod commands;
mod output;
mod parse;
mod pool;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::output::{config_err, CliError};
use crate::parse::parse_angle;

#[derive(Parser, Debug)]
#[command(
    name = "fstchain",
    version,
    about = "Fractional state transfer on qubit chains"
)]
struct Cli {
    /// Output directory; replaced as a whole when the run succeeds.
    #[arg(long, short, global = true, default_value = "fstchain-out")]
    out: PathBuf,
    /// Seed for every sampling step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file overriding entries of the tolerance block.
    #[arg(long, global = true)]
    tolerances: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct ChainArgs {
    /// Number of sites.
    #[arg(long)]
    pub n: usize,
    /// Transfer angle, e.g. `0.5pi`; clamped to [1e-6, pi].
    #[arg(long, value_parser = parse_angle)]
    pub theta: f64,
    /// Transfer time in seconds (default 1 when no `--j-max` is given).
    #[arg(long, conflicts_with = "j_max")]
    pub tau: Option<f64>,
    /// Largest coupling in Hz; the transfer time is solved for.
    #[arg(long)]
    pub j_max: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `iSWAP(theta)` has entries `cos(theta/2)`, `i sin(theta/2)`.
    HalfAngle,
    /// `iSWAP(theta)` has entries `cos(theta)`, `i sin(theta)`.
    Literal,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    FstLift,
    PairRotations,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Bfgs,
    NelderMead,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Couplings and detunings of an FST chain.
    Synthesize(ChainArgs),
    /// Single-excitation spectrum and transfer structure of `U(tau)`.
    Spectrum(ChainArgs),
    /// Site populations under free evolution from occupied sites.
    Evolve(EvolveArgs),
    /// Compare `U(tau)` with the effective non-local gate.
    VerifyMapping(ChainArgs),
    /// iSWAP/FSWAP network for the effective gate.
    Decompose(DecomposeArgs),
    /// Decomposition-over-FST duration ratio on an (N, theta) grid.
    SpeedSweep(SpeedSweepArgs),
    /// Parity protocol over all basis states and random superpositions.
    Parity(ParityArgs),
    /// Timed scenario from a JSON file.
    Scenario(ScenarioArgs),
    /// Optimize the parametric pulse of the three-qubit device.
    DeviceOptimize(DeviceOptimizeArgs),
    /// ZZ coupling of a qubit pair against the flux of its coupler.
    DeviceZzScan(ZzScanArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Initially occupied sites, e.g. `1,8`; empty for the vacuum.
    #[arg(long, default_value = "1")]
    pub excite: String,
    /// End time in units of tau.
    #[arg(long, default_value_t = 2.0)]
    pub t_end: f64,
    /// Grid points per tau.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_parser = parse_angle)]
    pub theta: f64,
    /// Largest coupling in Hz.
    #[arg(long, default_value_t = 1e7)]
    pub j_max: f64,
    /// Reading of the iSWAP angle.
    #[arg(long, value_enum, default_value = "half-angle")]
    pub convention: Convention,
}

#[derive(Args, Debug, Serialize)]
pub struct SpeedSweepArgs {
    /// Chain lengths: `a..b`, a list or one value.
    #[arg(long, default_value = "3..40")]
    pub n: String,
    /// Angles: `a..b` with `--points` values, a list or one value.
    #[arg(long, default_value = "0.05pi..pi")]
    pub theta: String,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ParityArgs {
    /// Register size (ancillas excluded).
    #[arg(long)]
    pub n: usize,
    /// Number of random superpositions checked after the basis states.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    /// Seeded readout shots per random state.
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    /// Largest coupling of the extended chain in Hz.
    #[arg(long, default_value_t = 1e7)]
    pub j_max: f64,
    #[arg(long, value_enum, default_value = "fst-lift")]
    pub method: Kernel,
}

#[derive(Args, Debug, Serialize)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    pub file: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct DeviceOptimizeArgs {
    /// Device parameters (GHz); the reference device when omitted.
    #[arg(long)]
    pub device: Option<PathBuf>,
    /// Starting pulse (GHz, ns); the theory seed when omitted.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Target angles: `a..b` with `--points` values, a list or one value.
    #[arg(long, default_value = "pi")]
    pub theta: String,
    #[arg(long, default_value_t = 1)]
    pub points: usize,
    /// Objective evaluations per angle.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, value_enum, default_value = "bfgs")]
    pub method: Optimizer,
    /// Stop once the infidelity is below this value.
    #[arg(long, default_value_t = 1e-3)]
    pub target: f64,
    /// Propagator substeps per envelope sample (automatic when omitted).
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Exit with status 3 when a final infidelity exceeds this value.
    #[arg(long)]
    pub require_infidelity: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ZzScanArgs {
    #[arg(long)]
    pub device: Option<PathBuf>,
    /// Qubit pair: 1 for (q1, q2), 2 for (q2, q3).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub pair: u8,
    /// Flux range in flux quanta.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.45, allow_negative_numbers = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 46)]
    pub points: usize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synthesize(_) => "synthesize",
            Command::Spectrum(_) => "spectrum",
            Command::Evolve(_) => "evolve",
            Command::VerifyMapping(_) => "verify-mapping",
            Command::Decompose(_) => "decompose",
            Command::SpeedSweep(_) => "speed-sweep",
            Command::Parity(_) => "parity",
            Command::Scenario(_) => "scenario",
            Command::DeviceOptimize(_) => "device-optimize",
            Command::DeviceZzScan(_) => "device-zz-scan",
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let start = Instant::now();
    let tol = commands::load_tolerances(cli.tolerances.as_deref())?;
    let seed = cli.seed;
    let report = match &cli.command {
        Command::Synthesize(a) => commands::synthesize(a, &tol),
        Command::Spectrum(a) => commands::spectrum(a, &tol),
        Command::Evolve(a) => commands::evolve(a, &tol),
        Command::VerifyMapping(a) => commands::verify_mapping(a, &tol),
        Command::Decompose(a) => commands::decompose(a, &tol),
        Command::SpeedSweep(a) => commands::speed_sweep(a),
        Command::Parity(a) => commands::parity(a, &tol, seed.unwrap_or(0)),
        Command::Scenario(a) => commands::scenario(a, seed),
        Command::DeviceOptimize(a) => commands::device_optimize(a),
        Command::DeviceZzScan(a) => commands::device_zz_scan(a),
    }?;
    let name = cli.command.name();
    output::emit(&cli.out, name, seed, &report, start.elapsed().as_secs_f64())
        .map_err(|e| config_err(format!("cannot write {}: {e}", cli.out.display())))?;
    if let Some(msg) = &report.failure {
        eprintln!("{name}: tolerance check failed: {msg}");
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
