use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::values::LimitSpec;

#[derive(Debug, Parser)]
#[command(name = "cclab", version, about = "Coded caching rates, simulation and gap verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form rates and their ratio.
    Rate(RateArgs),
    /// Bit-level simulation of a caching scheme.
    Simulate(SimulateArgs),
    /// Check the [1, 1.5] gap bound and the supporting inequalities.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Centralized,
    Decentralized,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output format (`text` applies to verify only).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Grid {
    /// Users K: a value or a:b:step.
    #[arg(short = 'K', long)]
    pub users: String,
    /// Files N: a value or a:b:step.
    #[arg(short = 'N', long)]
    pub files: String,
    /// Cache size M in files: a value or a:b:step.
    #[arg(short = 'M', long)]
    pub memory: String,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub grid: Grid,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scheme: Scheme,
    #[command(flatten)]
    pub grid: Grid,
    /// Bits per file F.
    #[arg(short = 'F', long)]
    pub file_bits: usize,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// exhaustive, distinct, or custom=D1,D2,... (1-based file numbers).
    #[arg(long, default_value = "distinct")]
    pub demands: String,
    /// Allow non-corner memory for the centralized scheme.
    #[arg(long)]
    pub memory_sharing: bool,
    /// Block width of random linear combinations (decentralized).
    #[arg(long, default_value_t = cclab::decentralized::DEFAULT_BLOCK_BITS)]
    pub block_bits: usize,
    /// Fail if the mean relative error of any configuration exceeds this.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Only the appendix values, next to their published targets.
    #[arg(long)]
    pub appendix: bool,
    /// Only a limit check, e.g. "N=4 M=2 Kmax=100000 eps=0.001".
    #[arg(long)]
    pub limit: Option<LimitSpec>,
    /// Largest K in the ratio sweep.
    #[arg(long, default_value_t = 200)]
    pub max_users: usize,
    /// Largest N in the ratio sweep.
    #[arg(long, default_value_t = 50)]
    pub max_files: usize,
    /// M = N j / steps for j = 1 .. steps - 1.
    #[arg(long, default_value_t = 100)]
    pub memory_steps: usize,
    /// Theta grid steps for the f, g, h and bound checks.
    #[arg(long, default_value_t = 1000)]
    pub theta_steps: usize,
    #[command(flatten)]
    pub output: Output,
}
