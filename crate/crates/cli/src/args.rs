use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rkhm::ScalarKernelSpec;

#[derive(Debug, Parser)]
#[command(name = "rkhm", version, about = "Kernel analysis of structured data with matrix-valued inner products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic samples as CSV.
    Gen(GenArgs),
    /// Orthonormalize the kernel features of a sample file and report diagnostics.
    Qr(QrArgs),
    /// Kernel PCA with block-valued coefficients.
    Pca(PcaArgs),
    /// Fit the Perron-Frobenius operator of a time series.
    PfFit(PfFitArgs),
    /// Out-of-sample prediction errors, optionally swept over the training horizon.
    PfError(PfErrorArgs),
    /// Eigenvalues of the fitted operator and the time-invariant term.
    Modal(ModalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelKind {
    Laplacian,
    Gaussian,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "laplacian")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

impl KernelArgs {
    pub fn spec(&self) -> ScalarKernelSpec {
        match self.kernel {
            KernelKind::Laplacian => ScalarKernelSpec::laplacian(self.gamma),
            KernelKind::Gaussian => ScalarKernelSpec::gaussian(self.gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenKind {
    Interacting,
    Clusters,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Elements per sample (interacting system).
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Number of time steps written, including x_0 (interacting system).
    #[arg(long = "T", default_value_t = 31)]
    pub steps: usize,
    /// Samples per cluster (clusters).
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Noise standard deviation; 0.01 for the interacting system and 0.1 for clusters by default.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write cluster labels (clusters).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Elements per sample.
    #[arg(long)]
    pub m: usize,
    /// Dimension of each element; defaults to the row width divided by m.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QrArgs {
    #[command(flatten)]
    pub samples: SampleArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Squared truncation threshold ε².
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eps2: f64,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub samples: SampleArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Number of principal axes.
    #[arg(long, default_value_t = 2)]
    pub axes: usize,
    /// Center the features before decomposing.
    #[arg(long)]
    pub centered: bool,
    /// Optional labels, one per sample, copied into the embedding table.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output directory.
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}

/// How a series file becomes a list of structured samples.
#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Elements per sample; with --delay-embed it is derived from the channel count.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Stack this many consecutive rows (channels) into each sample.
    #[arg(long = "delay-embed")]
    pub delay_embed: Option<usize>,
    /// Gaussian perturbation of every value; 0.2 with --delay-embed and 0 otherwise by default.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PfFitArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub eps2: f64,
    /// Number of transitions used; defaults to all.
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PfErrorArgs {
    /// Series to evaluate; without it the interacting system is generated per seed.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long)]
    pub d: Option<usize>,
    /// Noise of the generated series.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Comma-separated values of ε².
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub eps2: Vec<f64>,
    /// Index S of the predicted observation (x_{S−1} predicts x_S).
    #[arg(long = "S")]
    pub s: usize,
    /// Number of transitions used when not sweeping.
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    /// `a:b` evaluates the criterion ‖â_{T+1,S} − â_{T,S}‖ for T = a…b−1.
    #[arg(long = "sweep-T")]
    pub sweep: Option<String>,
    /// Number of replicas averaged.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative perturbation of kernel values emulating reduced precision.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModalArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub eps2: f64,
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    /// Half-width of the band around the unit circle.
    #[arg(long, default_value_t = rkhm::dynamics::DEFAULT_UNIT_BAND)]
    pub delta: f64,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}
