mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "splca", version, about = "t-wise covering arrays for feature models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a covering array
    Generate(GenerateArgs),
    /// Convert a feature model to the two-file model/constraints format
    Convert(ConvertArgs),
    /// Check the coverage of an array file
    Verify(VerifyArgs),
    /// Report root and mandatory features and the t-set reduction
    Reduce(ReduceArgs),
    /// Time reduced against unreduced generation
    Bench(BenchArgs),
    /// Significance tests over a bench CSV
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
pub struct Source {
    /// Feature model in the indented text format
    #[arg(long, conflicts_with_all = ["model", "constraints"], required_unless_present = "model")]
    pub fm: Option<PathBuf>,
    /// Model file: strength, column count, levels
    #[arg(long, requires = "constraints")]
    pub model: Option<PathBuf>,
    /// Constraints file matching --model
    #[arg(long, requires = "model")]
    pub constraints: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct AnnealArgs {
    /// Inner iteration budget per row-count probe
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Iterations without improvement before a probe gives up
    #[arg(long)]
    pub stagnation: Option<u64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Factor applied to the temperature once per cooling epoch
    #[arg(long)]
    pub cooling: Option<f64>,
    /// Iterations per cooling epoch
    #[arg(long)]
    pub epoch: Option<u64>,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: Source,
    /// Defaults to the model file header, or 3
    #[arg(short = 't', long)]
    pub strength: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Anneal on the full feature space
    #[arg(long)]
    pub no_reduce: bool,
    #[command(flatten)]
    pub anneal: AnnealArgs,
    /// Array file; stdout if absent
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ConvertArgs {
    pub fm: PathBuf,
    #[arg(short = 't', long, default_value_t = 3)]
    pub strength: usize,
    /// Writes PREFIX.model and PREFIX.constraints; stdout if absent
    #[arg(short, long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Array file
    pub array: PathBuf,
    #[command(flatten)]
    pub source: Source,
    #[arg(short = 't', long)]
    pub strength: Option<usize>,
    #[arg(long, default_value_t = splca::tsets::DEFAULT_MISSING_CAP)]
    pub missing_cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(short = 't', long)]
    pub strength: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Feature model files
    #[arg(required_unless_present = "fixtures")]
    pub models: Vec<PathBuf>,
    /// Benchmark the bundled example models
    #[arg(long)]
    pub fixtures: bool,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed_base: u64,
    #[arg(short = 't', long, default_value_t = 3)]
    pub strength: usize,
    /// Concurrent runs
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub anneal: AnnealArgs,
    /// Per-run CSV; stdout if absent
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Per-model summary CSV
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Histogram CSV of t-set and median time reductions
    #[arg(long)]
    pub histograms: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub bin_width: f64,
}

#[derive(Args)]
pub struct StatsArgs {
    /// Per-run CSV written by `bench`
    pub csv: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Convert(a) => commands::convert(a),
        Command::Verify(a) => commands::verify(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::Bench(a) => commands::bench(a),
        Command::Stats(a) => commands::stats(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
