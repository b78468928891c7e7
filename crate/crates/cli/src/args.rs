use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "orthoproj",
    about = "Variance vs. relative-distance trade-offs of orthogonal projections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form moments of (tvar, M, V) over Haar-random rank-k projectors.
    Moments {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Per-candidate (tvar, M, V) as CSV.
    Scan {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        candidates: CandidateArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Choose one candidate by a selection rule.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        candidates: CandidateArgs,
        /// cross, diamond, square, circle, star or pca_star.
        #[arg(long)]
        rule: String,
        /// Band half-width on |M - 1|; defaults to the 10th percentile over the set.
        #[arg(long)]
        m_tol: Option<f64>,
        /// Write the chosen frame as CSV.
        #[arg(long)]
        frame_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Draw Haar-random frames and write them as a design file.
    Sample {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Inspect a design file.
    Design {
        #[command(subcommand)]
        action: DesignCommand,
    },
    /// Minimal JL target dimension, optionally with an empirical check.
    JlCheck {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        epsilon: f64,
        /// Use the failure-probability form with exponent tau.
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        empirical: EmpiricalArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Augmented target losses.
    Atloss {
        #[command(subcommand)]
        action: AtlossCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum DesignCommand {
    /// Cubature strength test against the Haar moments.
    Validate {
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 2)]
        strength: u8,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = orthoproj::designs::CUBATURE_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo covering-radius estimate.
    Radius {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        probes: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum AtlossCommand {
    /// Loss value and gradient norm for a target/output batch.
    Eval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        yhat: PathBuf,
        /// Also write the gradient as CSV.
        #[arg(long)]
        gradient_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Numeric CSV, one point per row, optional header.
    #[arg(long)]
    pub data: PathBuf,
    /// Drop repeated rows before analysis.
    #[arg(long)]
    pub dedup: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct CandidateSource {
    /// Design file of candidate frames.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Number of Haar-random candidates to draw.
    #[arg(long, requires = "seed")]
    pub sample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CandidateArgs {
    #[command(flatten)]
    pub source: CandidateSource,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EmpiricalArgs {
    /// Cloud for an empirical success fraction.
    #[arg(long, requires_all = ["k", "samples", "seed"])]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
