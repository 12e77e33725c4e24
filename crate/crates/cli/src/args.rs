use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "driftmix",
    version,
    about = "Adaptive Gaussian mixture anomaly detection for drifting streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a PCA projection on a feature file.
    FitPca(FitPcaArgs),
    /// Stream a feature file through a model and write a per-sample trace.
    Run(RunArgs),
    /// Run one of the drift experiment protocols.
    Experiment(ExperimentArgs),
    /// Generate a labelled synthetic drifting stream.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct FitPcaArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Number of output components.
    #[arg(long, default_value_t = 20)]
    pub dims: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model configuration in `key = value` form.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use a capacity-constrained mixture with at most N modes.
    #[arg(long, value_name = "N", conflicts_with = "uagmm")]
    pub k: Option<usize>,
    /// Use the unconstrained mixture with merging (the default).
    #[arg(long)]
    pub uagmm: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// PCA model applied to every input row before it reaches the mixture.
    #[arg(long)]
    pub pca: Option<PathBuf>,
    #[arg(long)]
    pub input: PathBuf,
    /// Trace CSV path.
    #[arg(long)]
    pub output: PathBuf,
    /// Final model snapshot path. Defaults to the trace path with a
    /// `.snapshot.json` extension.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Optional CSV of merge events.
    #[arg(long)]
    pub merges: Option<PathBuf>,
    /// Continue from a saved snapshot instead of starting empty.
    #[arg(long, conflicts_with_all = ["config", "k", "uagmm", "alpha"])]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Intra,
    Inter,
    Retention,
    Memory,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub protocol: Protocol,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Stream specification (TOML) for a generated stream.
    #[arg(long, conflicts_with = "input")]
    pub spec: Option<PathBuf>,
    /// Labelled feature file instead of a generated stream.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Overrides the seed of the stream specification.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Consecutive presentations of each anomaly.
    #[arg(long, default_value_t = driftmix::harness::DEFAULT_REPEATS)]
    pub repeats: usize,
    /// Number of anomalies cycled before the first one returns. Defaults to
    /// running both 4 and 5.
    #[arg(long)]
    pub cycle: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Stream specification (TOML). Defaults apply to missing keys.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}
