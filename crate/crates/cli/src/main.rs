use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Parser, Debug)]
#[command(
    name = "geverf",
    version,
    about = "Extreme conditional quantiles with forest-weighted GEV fits"
)]
#[command(args_override_self = true, arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a simulated dataset and write it as CSV with a JSON sidecar.
    Simulate(SimulateArgs),
    /// Fit a model on a CSV dataset and save it as JSON.
    Fit(FitArgs),
    /// Predict GEV parameters and quantiles at query points.
    Predict(PredictArgs),
    /// Cross-validate the shape penalty and minimum leaf size.
    Cv(CvArgs),
    /// Compare the GEV model with forest quantile baselines on simulations.
    Benchmark(BenchmarkArgs),
    /// Goodness-of-fit of the PIT on a held-out tail of the data.
    Gof(GofArgs),
    /// Block-size sensitivity sweep on simulated data.
    BlockSweep(BlockSweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 2000)]
    pub num_trees: usize,
    #[arg(long, default_value_t = 5)]
    pub min_node_size: usize,
    /// Candidate features per split [default: min(p, ceil(sqrt p) + 20)]
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub subsample_fraction: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub honesty: bool,
    #[arg(long, default_value_t = 42)]
    pub forest_seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Feature columns [default: every column except the response]
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 40)]
    pub p: usize,
    #[arg(long, default_value_t = 90000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Sidecar path [default: the output path with a .json extension]
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.99,0.995,0.999,0.9995")]
    pub tau: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.0001,0.001,0.005,0.01,0.05,0.1"
    )]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50")]
    pub node_sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TruthArg {
    BlockMax,
    Response,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum BaselineArg {
    BlockMaxima,
    Raw,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    /// Covariate dimensions to sweep
    #[arg(long, value_delimiter = ',', default_value = "40")]
    pub p: Vec<usize>,
    #[arg(long, default_value_t = 90000)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.99,0.995,0.999,0.9995")]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1000)]
    pub test_points: usize,
    #[arg(long, value_enum, default_value_t = TruthArg::BlockMax)]
    pub truth: TruthArg,
    #[arg(long, value_enum, default_value_t = BaselineArg::BlockMaxima)]
    pub baseline_data: BaselineArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GofArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    /// Trailing fraction of rows held out for the PIT
    #[arg(long, default_value_t = 0.3)]
    pub holdout: f64,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the PIT values
    #[arg(long)]
    pub pit_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BlockSweepArgs {
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 40)]
    pub p: usize,
    #[arg(long, default_value_t = 90000)]
    pub n: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "10,15,20,25,30,35,40,45,50,55,60,65,70,75,80,85,90,95,100"
    )]
    pub m_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.99,0.999")]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1000)]
    pub test_points: usize,
    #[arg(long, default_value_t = 0.3)]
    pub holdout: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
