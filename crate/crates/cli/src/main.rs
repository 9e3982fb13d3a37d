//! `subnyquist` command-line experiments.
//!
//! ```text
//! subnyquist generate    --n 256 --k 5 --basis dft_real --seed 7 --out sig
//! subnyquist acquire     --mode serial --m 4 --input sig --out acq
//! subnyquist reconstruct --solver omp --input acq --out rec
//! subnyquist sweep       --config sweep.json --out sweep
//! subnyquist energy      --config energy.json --out energy
//! ```
//!
//! Exit status is 0 on success (a solve that does not converge is still a
//! success), 1 on I/O failure and 2 on invalid flags or configuration.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "subnyquist", version, about = "Sub-Nyquist compressive acquisition experiments")]
pub struct Cli {
    /// Master seed for every random draw of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Experiment config JSON; replaces the mode-specific flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sparse signal and write signal.csv, truth.json, basis.json.
    Generate(GenerateArgs),
    /// Measure a generated signal with one of the front ends.
    Acquire(AcquireArgs),
    /// Recover basis coefficients from an acquisition directory.
    Reconstruct(ReconstructArgs),
    /// Success-rate sweep over (k, l); config only.
    Sweep,
    /// Radio transmit energy of raw versus compressed blocks.
    Energy(EnergyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// identity, dft_real or random_orthonormal [default: dft_real]
    #[arg(long)]
    pub basis: Option<String>,
    /// Smallest nonzero magnitude [default: 1]
    #[arg(long)]
    pub amp_min: Option<f64>,
    /// Largest nonzero magnitude [default: 2]
    #[arg(long)]
    pub amp_max: Option<f64>,
    /// All nonzeros positive.
    #[arg(long)]
    pub unsigned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AcquireMode {
    Discrete,
    Serial,
    Pscs,
}

#[derive(Debug, Args)]
pub struct AcquireArgs {
    /// Directory holding signal.csv and basis.json.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<AcquireMode>,
    /// discrete: number of measurements.
    #[arg(long)]
    pub l: Option<usize>,
    /// discrete: gaussian or bernoulli [default: gaussian]
    #[arg(long)]
    pub matrix_kind: Option<String>,
    /// serial: decimation factor.
    #[arg(long)]
    pub m: Option<usize>,
    /// serial: integrate_and_dump or fir [default: integrate_and_dump]
    #[arg(long)]
    pub filter: Option<String>,
    /// serial: comma-separated FIR taps.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub taps: Option<Vec<f64>>,
    /// pscs: number of segments.
    #[arg(long)]
    pub segments: Option<usize>,
    /// pscs: fingers per segment.
    #[arg(long)]
    pub fingers: Option<usize>,
    /// pscs: samples shared by consecutive segments [default: 0]
    #[arg(long)]
    pub overlap: Option<usize>,
    /// pscs: rectangular or triangular [default: rectangular]
    #[arg(long)]
    pub window: Option<String>,
    /// pscs: continuous or repeated [default: continuous]
    #[arg(long)]
    pub chip_layout: Option<String>,
    /// Standard deviation of additive measurement noise [default: 0]
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Noise seed [default: derived from --seed]
    #[arg(long)]
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Directory holding measurements.csv, operator.csv, operator.json.
    #[arg(long)]
    pub input: PathBuf,
    /// Planted coefficients [default: <input>/truth.json when present]
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// omp, sl1gd or pnormgd [default: omp]
    #[arg(long)]
    pub solver: Option<String>,
    /// OMP atom budget.
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Residual (OMP) or gradient (GD) tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// backtracking or fixed_lipschitz
    #[arg(long)]
    pub step_rule: Option<String>,
    /// Smooth-l1: three-stage epsilon continuation.
    #[arg(long)]
    pub continuation: bool,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    /// Raw samples per block.
    #[arg(long)]
    pub n: Option<usize>,
    /// Compressed measurements per block.
    #[arg(long)]
    pub l: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

