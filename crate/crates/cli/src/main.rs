//! `polysample`: sample random closed polygons, estimate expectations, and
//! compare chord histograms with exact densities.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  invalid arguments or input files
  3  the sampler gave up after repeated closure failures
  4  the sample budget ran out before the confidence target was met
  5  Jacobian verification failed";

#[derive(Parser, Debug)]
#[command(name = "polysample", version, about, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write weighted closed polygons as CSV or JSON lines.
    #[command(after_help = EXIT_CODES)]
    Sample(SampleArgs),
    /// Sample until the confidence interval of a functional is narrow enough.
    #[command(after_help = EXIT_CODES)]
    Estimate(EstimateArgs),
    /// Weighted histogram of a functional, optionally next to an exact density.
    #[command(after_help = EXIT_CODES)]
    Histogram(HistogramArgs),
    /// Compare the closed-form opening Jacobian with finite differences.
    #[command(name = "verify-jacobian", after_help = EXIT_CODES)]
    VerifyJacobian(VerifyArgs),
}

/// Options shared by every command that draws polygons.
#[derive(Args, Debug, Clone)]
pub struct PolygonArgs {
    /// Number of edges. Required unless --edgelengths is given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Ambient dimension.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// All edges of length 1 (the default when --edgelengths is absent).
    #[arg(long, conflicts_with = "edgelengths")]
    pub equilateral: bool,
    /// File of whitespace-separated edgelengths.
    #[arg(long, value_name = "FILE")]
    pub edgelengths: Option<PathBuf>,
    /// Metric weights: sqrt-r, r, or a file of whitespace-separated values.
    #[arg(long, default_value = "sqrt-r", value_name = "sqrt-r|r|FILE")]
    pub rho: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight for shapes modulo rotation instead of the full measure.
    #[arg(long)]
    pub quotient: bool,
    /// Samples per independent random stream.
    #[arg(long, default_value_t = polysample::sampler::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    /// Worker threads (defaults to all cores). Output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print progress and timings to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub polygon: PolygonArgs,
    #[arg(long)]
    pub count: usize,
    /// CSV columns: w_1..w_d, y_1_1..y_n_d (edge by edge), weight.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub polygon: PolygonArgs,
    /// gyradius or chord:i:j (1-based vertices).
    #[arg(long)]
    pub functional: String,
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,
    /// Stop once the interval radius is at most this fraction of |mean|.
    #[arg(long, default_value_t = 0.001)]
    pub rel_radius: f64,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_samples: u64,
}

#[derive(Args, Debug)]
pub struct HistogramArgs {
    #[command(flatten)]
    pub polygon: PolygonArgs,
    /// gyradius or chord:i:j (1-based vertices).
    #[arg(long)]
    pub functional: String,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    /// Exact density to print next to the estimate, evaluated at bin centers:
    /// hexagon-eq, hexagon-neq, tetragon-full or tetragon-quotient.
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub polygon: PolygonArgs,
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => commands::sample(&args),
        Command::Estimate(args) => commands::estimate(&args),
        Command::Histogram(args) => commands::histogram(&args),
        Command::VerifyJacobian(args) => commands::verify_jacobian(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("polysample: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
