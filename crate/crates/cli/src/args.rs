use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use starfan::datagen::LabelVariant;
use starfan::optim::FitOptions;

#[derive(Debug, Parser)]
#[command(
    name = "starfan",
    version,
    about = "Star-shaped classifiers on simplicial fans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a noisy dataset from a star and write it as CSV.
    Gen(GenArgs),
    /// Fit the maximum-likelihood star for one rate parameter.
    Train(TrainArgs),
    /// Score a given star (optionally translated) on a dataset.
    Eval(EvalArgs),
    /// Fit over a grid of rate parameters, warm-started along the ray.
    Sweep(SweepArgs),
    /// Enumerate the chambers of the data arrangement inside a box.
    Chambers(ChambersArgs),
    /// Evaluate a loss over a planar grid and render it as CSV and SVG.
    Landscape(LandscapeArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// kite:<d>, typeb:<d>, rays2d:<path> or a fan JSON file. Defaults to the
    /// matching fan for built-in datasets.
    #[arg(long)]
    pub fan: Option<String>,
    /// CSV file with header x1,...,xd,y, or builtin:line / builtin:diagonal.
    #[arg(long)]
    pub data: String,
    /// `complemented` flips every label after loading.
    #[arg(long, default_value = "listed")]
    pub labels_variant: LabelVariant,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = FitOptions::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = FitOptions::default().max_iter)]
    pub max_iter: usize,
    /// Lower bound kept on every parameter.
    #[arg(long, default_value_t = FitOptions::default().floor)]
    pub floor: f64,
    /// Iterates beyond this sup-norm count as escaping to infinity.
    #[arg(long, default_value_t = FitOptions::default().radius)]
    pub radius: f64,
}

impl SolverArgs {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            floor: self.floor,
            radius: self.radius,
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Hold out this fraction of the data (seeded shuffle) for testing.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "typeb:2", conflicts_with = "spec")]
    pub fan: String,
    #[arg(long, default_value_t = 500, conflicts_with = "spec")]
    pub count: usize,
    /// Probability that an emitted label is correct.
    #[arg(long, default_value_t = 0.9, conflicts_with = "spec")]
    pub noise: f64,
    #[arg(long, default_value_t = 0, conflicts_with = "spec")]
    pub seed: u64,
    /// Comma-separated true parameters; defaults to alternating 1.6 and 1.0.
    #[arg(long, value_delimiter = ',', conflicts_with = "spec")]
    pub a_true: Option<Vec<f64>>,
    /// Read the whole generator spec from a JSON file instead of flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Also write the fitted parameters as a JSON array.
    #[arg(long)]
    pub save_params: Option<PathBuf>,
    /// JSON report path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON array of parameters, or {"a": [...], "t": [...]}.
    #[arg(long)]
    pub params: PathBuf,
    /// Also report the log-likelihood at this rate parameter.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated, strictly ascending rate parameters.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["lambda_min", "lambda_max", "steps"])]
    pub lambdas: Option<Vec<f64>>,
    /// Log-spaced grid from --lambda-min to --lambda-max.
    #[arg(long, default_value_t = 0.05)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 40)]
    pub steps: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChambersArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Upper bound of the parameter box in every coordinate.
    #[arg(long = "box", default_value_t = 1.2)]
    pub box_hi: f64,
    /// Lower bound of the parameter box (must be positive).
    #[arg(long, default_value_t = 1e-6)]
    pub box_lo: f64,
    /// Chamber CSV; the JSON summary always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    /// Two free parameters `a` (requires n = 2).
    Parameter,
    /// Translations `t` of a fixed star (requires d = 2).
    Translation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Err,
    Likelihood,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "parameter")]
    pub space: Space,
    #[arg(long, value_enum, default_value = "err")]
    pub metric: Metric,
    /// Rate parameter for the likelihood metric.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Star for translation landscapes: JSON array of parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Output directory for landscape.csv and landscape.svg.
    #[arg(long)]
    pub out: PathBuf,
}
