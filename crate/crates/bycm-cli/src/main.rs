//! `bycm`: region sweeps, codec simulation, graph checks and duality reports.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Exit codes.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_CAPACITY: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "bycm", version, about = "Rate regions, random-binning simulation and duality for correlated-message source coding")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output path prefix; `.csv` or `.json` is appended. Data goes to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Optimizer grid resolution (channel entries are multiples of 1/grid).
    #[arg(long, global = true, default_value_t = 32)]
    pub grid: u32,

    /// Monte-Carlo trials (`simulate`) or codebook seeds (`graphcheck --induced`).
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum sum rate and corner point D over a distortion sweep (CSV).
    Region(RegionArgs),
    /// Monte-Carlo run of the random-binning scheme (JSON).
    Simulate(SimulateArgs),
    /// Near semi-regularity of an edge list, or of codec-induced graphs (JSON / CSV).
    Graphcheck(GraphcheckArgs),
    /// Dual broadcast channel of a solved source problem and the sum-rate gap (JSON).
    Duality(DualityArgs),
}

/// Where the two-source PMF comes from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// Doubly symmetric binary source with this crossover.
    #[arg(long, conflicts_with = "source")]
    pub dsbs: Option<f64>,

    /// JSON file holding a two-axis PMF.
    #[arg(long)]
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegionArgs {
    #[command(flatten)]
    pub src: SourceArgs,

    /// Distortion budgets, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub d: Vec<f64>,

    /// Auxiliary alphabet size (default |X2| + 2).
    #[arg(long)]
    pub aux_size: Option<usize>,

    /// Restrict the search to channels whose V determines nothing beyond X1 classes.
    #[arg(long)]
    pub restricted: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CodecArgs {
    #[command(flatten)]
    pub src: SourceArgs,

    /// Test channel p(v|x2): `identity`, `constant` or `bsc:<p>`.
    #[arg(long, default_value = "identity")]
    pub aux: String,

    /// Block length; `simulate` takes a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub n: Vec<usize>,

    /// Typicality parameter ε.
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,

    /// Degree slack exponent ε′; default 3·ε₁ + 0.05 with ε₁ measured on (X1, V).
    #[arg(long)]
    pub eps_prime: Option<f64>,

    /// Markov-lemma widening factor K (ε̃ = K ε).
    #[arg(long, default_value_t = 3.0)]
    pub k: f64,

    /// Corner point the rates are taken from: A, B, C or D.
    #[arg(long, default_value = "D")]
    pub point: String,

    /// Bits added to every rate coordinate (may be negative; rates are clamped at 0).
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub margin: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphcheckArgs {
    /// CSV edge list with header `side1,side2`.
    #[arg(long, required_unless_present = "induced")]
    #[serde(skip)]
    pub edges: Option<PathBuf>,

    /// First-side vertex count.
    #[arg(long)]
    pub n1: Option<usize>,

    /// Second-side vertex count.
    #[arg(long)]
    pub n2: Option<usize>,

    /// `Δ1,Δ2,Δ1′,Δ2′,μ`.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,

    /// Check the graphs induced by random codebooks instead of an edge list.
    #[arg(long)]
    pub induced: bool,

    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DualityArgs {
    #[command(flatten)]
    pub src: SourceArgs,

    /// Distortion budget of the source problem.
    #[arg(long, default_value_t = 0.1)]
    pub d: f64,

    /// Cost scale c1.
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,

    /// Cost offset θ.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,

    /// Block length used for the graph exponents.
    #[arg(long, default_value_t = 16)]
    pub n: usize,

    /// ε′ used for the graph exponents.
    #[arg(long, default_value_t = 0.1)]
    pub eps_prime: f64,
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
