//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::formats::DatasetFormat;

#[derive(Parser, Debug)]
#[command(
    name = "zvl",
    version,
    about = "Rating-value-agnostic recommenders and voting tally simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic Zipf-rated dataset as MovieLens-style TSV
    Generate(GenerateArgs),
    /// Train a model and write a model file plus a loss-trace CSV
    Train(TrainArgs),
    /// Evaluate model files against a held-out split
    Evaluate(EvaluateArgs),
    /// Borda-count elections over ordinal ballots
    Borda {
        #[command(subcommand)]
        command: BordaCommand,
    },
    /// Range-voting elections over star ratings
    Range {
        #[command(subcommand)]
        command: RangeCommand,
    },
    /// Predict a range-voting tally without reading star values and test
    /// the prediction against a permutation null
    ClaimExperiment(ClaimArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Zeromat,
    Ppr,
    Skellam,
    Mf,
    Itemmean,
    Random,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Zeromat => "zeromat",
            Algo::Ppr => "ppr",
            Algo::Skellam => "skellam",
            Algo::Mf => "mf",
            Algo::Itemmean => "itemmean",
            Algo::Random => "random",
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub users: usize,
    #[arg(long)]
    pub items: usize,
    #[arg(long, default_value_t = 5)]
    pub scale: u32,
    /// Expected fraction of pairs rated, in (0, 1]
    #[arg(long)]
    pub density: f64,
    /// Std dev of rating noise around an item's true class
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output ratings TSV
    #[arg(short, long)]
    pub out: PathBuf,
}

fn parse_format(s: &str) -> Result<DatasetFormat, String> {
    s.parse()
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Ratings file
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "movielens-tab")]
    pub format: DatasetFormat,
    /// Declared star scale (default: max observed star)
    #[arg(long)]
    pub scale: Option<u32>,
    /// Train fraction in (0, 1); omit to use the whole file
    #[arg(long)]
    pub split: Option<f64>,
    /// Seed of the train/test split (default: derived from --seed);
    /// pass the same value to train and evaluate
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// Learning rate φ
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Pareto exponent α
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    /// Denominator/margin clamp ε
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 64)]
    pub user_sample: usize,
    #[arg(long, default_value_t = 8)]
    pub item_sample: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_u: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_v: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model file
    #[arg(short, long)]
    pub out: PathBuf,
    /// Optional per-epoch loss trace CSV
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Re-train on star-permuted data and fail unless the model file is
    /// checksum-identical (zeromat only)
    #[arg(long)]
    pub audit_agnostic: bool,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Model file (repeatable; models are evaluated concurrently up to
    /// ZVL_THREADS)
    #[arg(long, required = true)]
    pub model: Vec<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (one row per model)
    #[arg(short, long)]
    pub out: PathBuf,
    /// Optional human-readable report
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum BordaCommand {
    /// Tally ordinal ballots
    Tally(BordaTallyArgs),
}

#[derive(Args, Debug)]
pub struct BordaTallyArgs {
    /// Ballots CSV: header `voter,rank1,rank2,...`, variable-length rows
    #[arg(long)]
    pub ballots: PathBuf,
    /// Output tally CSV
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum RangeCommand {
    /// Tally star ratings as range votes (items are candidates)
    Tally(RangeTallyArgs),
}

#[derive(Args, Debug)]
pub struct RangeTallyArgs {
    /// Ratings file (voters × candidates)
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "movielens-tab")]
    pub format: DatasetFormat,
    #[arg(long)]
    pub scale: Option<u32>,
    /// Output tally CSV
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClaimArgs {
    #[arg(long)]
    pub users: usize,
    #[arg(long)]
    pub items: usize,
    #[arg(long, default_value_t = 5)]
    pub scale: u32,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
    /// Output report path; a machine-readable CSV is written next to it
    #[arg(short, long)]
    pub out: PathBuf,
}
