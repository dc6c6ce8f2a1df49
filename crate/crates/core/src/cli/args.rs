use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterModelKind;
use crate::divergence::DivergenceKind;
use crate::io::DatasetFormat;
use crate::samplers::{MixingWeights, SamplerKind};
use crate::selection::{Criterion, LossKind};

#[derive(Debug, Parser)]
#[command(
    name = "pldl",
    version,
    about = "Pool crowd labels across similar items and select pooling hyperparameters by simulation",
    args_override_self = true
)]
pub struct Cli {
    /// JSON object whose keys replace flags (`p_max` for `--p-max`, ...).
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a dataset, rewrite it as JSON lines and optionally split it.
    Ingest(IngestArgs),
    /// Build a pooling.
    #[command(subcommand)]
    Pool(PoolCommand),
    /// Select a pooling hyperparameter with simulation tests.
    #[command(subcommand)]
    Select(SelectCommand),
    /// Generate a synthetic label set.
    Sample(SampleArgs),
    /// Train the softmax regressor on refined or raw label distributions.
    Train(TrainArgs),
    /// Score a trained model on a dataset.
    Evaluate(EvaluateArgs),
    /// Overall label histogram of a dataset.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum PoolCommand {
    /// Neighborhood-based pooling at one radius.
    Nbp(NbpArgs),
    /// Mean KL and neighborhood sizes over a radius grid.
    Profile(ProfileArgs),
    /// Cluster-based pooling (median-loss fit over several trials).
    Cluster(ClusterArgs),
}

#[derive(Debug, Subcommand)]
pub enum SelectCommand {
    /// Choose the number of clusters.
    Clusters(SelectClustersArgs),
    /// Choose the neighborhood radius by the elbow of the test curve.
    Radius(SelectRadiusArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Dataset file (.jsonl or .csv).
    #[arg(long)]
    pub data: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<DatasetFormat>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    /// Canonical JSON-lines copy of the dataset.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write train.jsonl, dev.jsonl and test.jsonl here.
    #[arg(long)]
    pub split_dir: Option<PathBuf>,
    /// Train:dev:test proportions.
    #[arg(long, default_value = "0.5:0.25:0.25")]
    pub ratios: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NbpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub radius: f64,
    #[arg(long, value_enum, default_value_t = DivergenceKind::Kl)]
    pub measure: DivergenceKind,
    /// Smoothing of compared distributions (KL only).
    #[arg(long, default_value_t = 0.01)]
    pub comparison_alpha: f64,
    /// Smoothing of the refined distributions.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProfileArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0.5:10:0.5")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = DivergenceKind::Kl)]
    pub measure: DivergenceKind,
    #[arg(long, default_value_t = 0.01)]
    pub comparison_alpha: f64,
    /// Smoothing used inside the KL loss.
    #[arg(long, default_value_t = 0.01)]
    pub loss_alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 75.0)]
    pub gamma_pi: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma_phi: f64,
    /// LDA document-topic concentration (default 50 / p).
    #[arg(long)]
    pub lda_alpha: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub lda_beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    #[arg(long, value_enum, default_value_t = ClusterModelKind::Fmm)]
    pub model: ClusterModelKind,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Loss used to pick the median trial.
    #[arg(long, value_enum, default_value_t = LossKind::MeanKl)]
    pub loss: LossKind,
    #[arg(long, default_value_t = 0.01)]
    pub loss_alpha: f64,
    /// Smoothing of the refined distributions.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SelectClustersArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    #[arg(long, value_enum, default_value_t = ClusterModelKind::Fmm)]
    pub model: ClusterModelKind,
    #[arg(long, default_value_t = 1)]
    pub p_min: usize,
    #[arg(long, default_value_t = 40)]
    pub p_max: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Synthetic label sets per candidate.
    #[arg(long, default_value_t = 1000)]
    pub b: usize,
    #[arg(long, value_enum, default_value_t = LossKind::MeanKl)]
    pub loss: LossKind,
    #[arg(long, default_value_t = 0.01)]
    pub loss_alpha: f64,
    #[arg(long, value_enum, default_value_t = Criterion::AbsStdDiff)]
    pub criterion: Criterion,
    /// Mixing weights of the cluster sampler.
    #[arg(long, value_enum, default_value_t = MixingWeights::Empirical)]
    pub weights: MixingWeights,
    /// Skip the bootstrap-sampler comparison columns.
    #[arg(long)]
    pub no_bootstrap: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitArgs,
    /// Receives selection.csv and selection.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SelectRadiusArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    #[arg(long, default_value = "0.5:10:0.5")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = SamplerKind::Nbp)]
    pub sampler: SamplerKind,
    #[arg(long, value_enum, default_value_t = DivergenceKind::Kl)]
    pub measure: DivergenceKind,
    #[arg(long, default_value_t = 0.01)]
    pub comparison_alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub b: usize,
    #[arg(long, value_enum, default_value_t = LossKind::MeanKl)]
    pub loss: LossKind,
    #[arg(long, default_value_t = 0.01)]
    pub loss_alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub generator: SamplerKind,
    /// Reference dataset (bootstrap; default shape for the others).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<DatasetFormat>,
    /// Pooling file from `pool nbp` or `pool cluster`.
    #[arg(long)]
    pub pooling: Option<PathBuf>,
    /// Population model JSON (population generator).
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Number of items (default: as the reference).
    #[arg(long)]
    pub n: Option<usize>,
    /// Votes per item (default: as the reference).
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long, value_enum, default_value_t = MixingWeights::Empirical)]
    pub weights: MixingWeights,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    /// Train on the refined distributions of this pooling instead of the
    /// raw empirical ones.
    #[arg(long)]
    pub pooling: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Score against this pooling's refined distributions.
    #[arg(long)]
    pub pooling: Option<PathBuf>,
    /// Metrics JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Dataset; taken from the pooling file's configuration when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<DatasetFormat>,
    /// Adds the mean refined distribution as a column.
    #[arg(long)]
    pub pooling: Option<PathBuf>,
    /// Histogram CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
