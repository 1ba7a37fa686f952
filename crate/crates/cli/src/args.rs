use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cpkit",
    version,
    about = "Offline change point detection, simulation and benchmarking"
)]
pub struct Cli {
    /// Upper bound on worker threads. Defaults to the number of cores.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect change points in a data file.
    Detect(DetectArgs),
    /// Generate a dataset and its ground-truth sidecar from a scenario file.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo sweep and write a rate report.
    Benchmark(BenchmarkArgs),
}

/// Detector tuning. Unset values fall back to the configuration file and
/// then to the defaults documented in the README.
#[derive(Debug, Default, Args)]
pub struct TuningArgs {
    /// Penalty for penalised dynamic programming.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Threshold for binary segmentation.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of random intervals.
    #[arg(long, value_name = "M")]
    pub intervals: Option<usize>,
    /// Longest random interval.
    #[arg(long)]
    pub max_interval_length: Option<usize>,
    /// Density-estimator bandwidth.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Polynomial order.
    #[arg(long, value_name = "r")]
    pub order: Option<usize>,
    /// Kernel name: linear or rbf (kernel model), gaussian, epanechnikov or
    /// uniform-ball (density model).
    #[arg(long)]
    pub kernel: Option<String>,
    /// Rbf kernel scale in exp(-gamma |x - y|^2).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Network scan threshold.
    #[arg(long)]
    pub tau1: Option<f64>,
    /// Eigenvalue threshold of the network refinement template.
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Entry clipping level of the network refinement template.
    #[arg(long)]
    pub tau3: Option<f64>,
    /// Covariance principal-direction buffer.
    #[arg(long)]
    pub pc_buffer: Option<f64>,
    /// Covariance scan margin.
    #[arg(long)]
    pub scan_margin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Key-value file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model family: mean, poly, covariance, network, ks, density or kernel.
    #[arg(long)]
    pub model: Option<String>,
    /// Detection method: pdp, wbs or refined.
    #[arg(long)]
    pub method: Option<String>,
    /// Data file: a CSV series, or an edge list for the network model.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Result file. The result is printed when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed for random intervals and subsampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record the detector wall time in the result.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file.
    #[arg(long)]
    pub config: PathBuf,
    /// Data file to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Ground-truth file. Defaults to `<output>.truth.json`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Sweep file: a base scenario, a grid and the detector settings.
    #[arg(long)]
    pub config: PathBuf,
    /// Rate report CSV to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Detection method.
    #[arg(long)]
    pub method: Option<String>,
    /// Replicates per grid point.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Sweep seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record the mean detector runtime per grid point.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub tuning: TuningArgs,
}
