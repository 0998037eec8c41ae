//! `mimo-doa`: snapshot synthesis, DOA estimation, Monte-Carlo benchmarks and
//! complexity tables for 2D MIMO virtual arrays.
//!
//! Exit codes: 0 success, 1 estimation failure, 2 invalid configuration or
//! spec file, 3 I/O or malformed data file, 4 degenerate iterative update,
//! 5 spectrum peak deficit.

mod commands;
mod scene_file;
mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Degenerate(String),
    PeakDeficit(String),
    Other(String),
}

impl CliError {
    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m)
            | CliError::Io(m)
            | CliError::Degenerate(m)
            | CliError::PeakDeficit(m)
            | CliError::Other(m) => m,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::PeakDeficit(_) => 5,
        }
    }
}

impl From<mimo_doa::Error> for CliError {
    fn from(e: mimo_doa::Error) -> Self {
        use mimo_doa::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidConfig(_) | E::DimensionMismatch(_) | E::EmptyInput(_) => {
                CliError::Validation(msg)
            }
            E::Io(_) | E::MalformedFile(_) => CliError::Io(msg),
            E::DegenerateUpdate { .. } => CliError::Degenerate(msg),
            E::PeakDeficit { .. } => CliError::PeakDeficit(msg),
            E::NonFiniteCost { .. } | E::AzimuthUndefined { .. } | E::InconsistentSteering { .. } => {
                CliError::Other(msg)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Idea,
    Music,
}

#[derive(Parser, Debug)]
#[command(
    name = "mimo-doa",
    version,
    about = "2D DOA estimation on MIMO virtual arrays: iterative subspace estimator, 2D MUSIC baseline, complexity models, Monte-Carlo benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize array snapshots from a scene file into a binary container
    Synth(SynthArgs),
    /// Estimate source DOAs from a scene file or a snapshot container
    Estimate(EstimateArgs),
    /// Run a Monte-Carlo benchmark experiment from a spec file or preset
    Bench(BenchArgs),
    /// Evaluate the analytic complexity models and gain tables
    Complexity(ComplexityArgs),
}

#[derive(clap::Args, Debug)]
pub struct SynthArgs {
    /// Scene description (TOML)
    #[arg(long)]
    pub scene: PathBuf,
    /// Output snapshot container path
    #[arg(long)]
    pub out: PathBuf,
    /// Override the scene's snapshot count
    #[arg(long)]
    pub samples: Option<usize>,
    /// Override the scene's SNR in dB
    #[arg(long)]
    pub snr: Option<f64>,
    /// Override the scene's RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable noise exactly (sigma² = 0)
    #[arg(long)]
    pub noise_free: bool,
}

#[derive(clap::Args, Debug)]
pub struct EstimateArgs {
    /// Scene description (TOML); snapshots are synthesized from it
    #[arg(long, conflicts_with = "snapshots")]
    pub scene: Option<PathBuf>,
    /// Snapshot container produced by `synth`
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Number of sources (required with --snapshots)
    #[arg(long)]
    pub sources: Option<usize>,
    #[arg(long, value_enum)]
    pub estimator: EstimatorArg,
    /// Iteration count for the iterative estimator
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Grid step in degrees for the spectrum search
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Override the scene's snapshot count
    #[arg(long)]
    pub samples: Option<usize>,
    /// Override the scene's SNR in dB
    #[arg(long)]
    pub snr: Option<f64>,
    /// Override the scene's RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimate from the analytic covariance (requires --scene)
    #[arg(long)]
    pub noise_free: bool,
    /// Also write the DOA table to this CSV file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the per-update cost trace (iterative estimator only)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the full pseudospectrum CSV (spectrum estimator only)
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Experiment spec (TOML)
    #[arg(long, conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    /// Built-in experiment spec; see --list-presets
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory (default: $MIMO_DOA_OUT_DIR, then ".")
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Override the spec's trial count
    #[arg(long)]
    pub trials: Option<usize>,
    /// Override the spec's master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output artifacts: csv, svg or both
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// List built-in preset names and exit
    #[arg(long)]
    pub list_presets: bool,
    /// Print a built-in preset spec to stdout and exit
    #[arg(long)]
    pub dump_preset: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct ComplexityArgs {
    /// Number of sources K
    #[arg(long, default_value_t = 3)]
    pub sources: u64,
    /// Number of snapshots M
    #[arg(long, default_value_t = 50)]
    pub samples: u64,
    /// Iteration count T (default 4K)
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Search precision in degrees for the spectrum cost model
    #[arg(long, default_value_t = 1.0)]
    pub grid_step: f64,
    /// Transmit elements (default K+1)
    #[arg(long)]
    pub n_tx: Option<u64>,
    /// Receive elements (default K+1)
    #[arg(long)]
    pub n_rx: Option<u64>,
    /// Parameter to sweep: sources, samples, iterations, n_tx, n_rx, n_theta, n_phi
    #[arg(long)]
    pub sweep: Option<String>,
    /// Comma-separated sweep values
    #[arg(long)]
    pub values: Option<String>,
    /// With --sweep sources: tie T = factor·K and the array to K+1 per axis
    #[arg(long)]
    pub t_factor: Option<u64>,
    /// Also write the table as CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Estimate(args) => commands::cmd_estimate(args),
        Command::Bench(args) => {
            if args.format != "csv" && args.format != "svg" && args.format != "both" {
                return Err(CliError::Validation(format!(
                    "--format must be csv, svg or both, got '{}'",
                    args.format
                )));
            }
            commands::cmd_bench(args)
        }
        Command::Complexity(args) => commands::cmd_complexity(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
