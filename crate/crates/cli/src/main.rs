mod commands;
mod data;
mod manifest;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files.
    #[error("{0}")]
    Input(String),
    /// The numerics failed on otherwise valid input.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "gpbench", version, about = "Fit, evaluate and benchmark kriging metamodels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV with columns x1..xd,y
    Fit(FitArgs),
    /// Predict with a saved model at the rows of a CSV
    Predict(PredictArgs),
    /// Macroreplicated accuracy experiment on a test function
    Benchmark(BenchmarkArgs),
    /// Two-stage stochastic kriging experiment on the M/M/1 queue
    SkMm1(SkArgs),
    /// Write a maximin Latin hypercube design on [0,1]^d
    GenDesign(DesignArgs),
    /// Evaluate a test function at the rows of a CSV
    EvalFn(EvalArgs),
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// gauss, pexp:P or matern52
    #[arg(long, default_value = "gauss")]
    pub kernel: String,
    /// fixed:V, estimate, dlb or dace
    #[arg(long, default_value = "estimate")]
    pub nugget: String,
    /// theta, log10, inv or lensq
    #[arg(long, default_value = "theta")]
    pub param: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optimizer runs after clustering the candidate starts
    #[arg(long, default_value_t = 5)]
    pub starts: usize,
    /// Model file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Diagnostics JSON (defaults to OUT.diagnostics.json)
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with columns x1..xd
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub function: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub m: usize,
    /// Comma-separated profile labels (default: all deterministic profiles)
    #[arg(long)]
    pub profiles: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub macroreps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Serialize)]
pub struct SkArgs {
    #[arg(long)]
    pub n2: usize,
    #[arg(long, default_value_t = 5)]
    pub n1: usize,
    /// Comma-separated stochastic profile labels (default: all of them)
    #[arg(long)]
    pub profiles: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub macroreps: usize,
    /// Arrivals simulated per replicate
    #[arg(long, default_value_t = 50_000)]
    pub customers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Serialize)]
pub struct DesignArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exchange proposals
    #[arg(long, default_value_t = gpbench::designs::DESIGN_SWAPS)]
    pub iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub function: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::SkMm1(a) => commands::sk_mm1(a),
        Command::GenDesign(a) => commands::gen_design(a),
        Command::EvalFn(a) => commands::eval_fn(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpbench: {e}");
            ExitCode::from(e.code())
        }
    }
}
