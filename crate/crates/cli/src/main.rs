//! `rankdist` — learned ordering of image distortion severity.
//!
//! Four subcommands cover the pipeline end to end:
//!
//! - `gen-dataset` builds an ordered patch-pair corpus from synthetic test
//!   charts or a directory of images;
//! - `train` fits the patch scorer on a corpus manifest and saves a
//!   checkpoint plus a training-history CSV;
//! - `eval-pairs` measures pairwise ordering accuracy, either directly on a
//!   manifest's held-out test split or by Monte-Carlo trials over a
//!   directory of `<name>_level<k>.png` images;
//! - `rank-set` orders a set of registered images by predicted distortion.
//!
//! Every command is deterministic given its flags: identical invocations
//! produce identical stdout and identical output files. Exit codes: 0 on
//! success, 1 on runtime errors, 2 on usage errors. `RANKDIST_THREADS`
//! caps worker parallelism without changing any results.

mod commands;
mod config;
mod report;
mod sources;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use rankdist_core::dataset::DatasetError;
use rankdist_core::distortion::{DistortionError, DistortionKind};
use rankdist_core::imaging::ImageError;
use rankdist_core::model::ModelError;
use rankdist_core::ranking::RankingError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation: missing or contradictory arguments, malformed
    /// config. Exits 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that goes wrong after arguments resolve. Exits 1.
    #[error("{0}")]
    Msg(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Shorthand for a usage error.
pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser)]
#[command(name = "rankdist", version, about = "Learn and apply a distortion-severity ordering of images")]
struct Cli {
    /// JSON file supplying per-command defaults; explicit flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an ordered patch-pair corpus (manifest + PNG patches)
    GenDataset(GenArgs),
    /// Train the patch scorer on a corpus manifest
    Train(TrainArgs),
    /// Measure pairwise ordering accuracy of a trained scorer
    EvalPairs(EvalArgs),
    /// Rank registered images by predicted distortion level
    RankSet(RankArgs),
}

/// Distortion kind selector shared by flags and config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Moire,
    Lca,
}

impl From<KindArg> for DistortionKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Moire => DistortionKind::Moire,
            KindArg::Lca => DistortionKind::Lca,
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct GenArgs {
    /// Distortion to simulate (required)
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// `synthetic` for generated charts, or a directory of PNG images (required)
    #[arg(long, value_name = "synthetic|DIR")]
    pub sources: Option<String>,
    /// Corpus output directory, receives manifest.jsonl and patches/ (required)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of synthetic charts to draw [default: 50]
    #[arg(long)]
    pub count: Option<usize>,
    /// Ordered pairs drawn per source [default: 6]
    #[arg(long)]
    pub pairs_per_source: Option<usize>,
    /// Patch-pair budget per drawn pair [default: 8]
    #[arg(long)]
    pub max_rois: Option<usize>,
    /// Synthetic chart side length, px [default: 320 moire, 192 lca]
    #[arg(long)]
    pub size: Option<usize>,
    /// Base RNG seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    /// Corpus manifest; patch paths resolve against its directory (required)
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Output directory, receives model.ckpt and history.csv (required)
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Passes over the training split [default: 20]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Pairs per SGD batch [default: 64]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// SGD learning rate [default: 0.01]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// SGD momentum [default: 0.9]
    #[arg(long)]
    pub momentum: Option<f64>,
    /// L2 weight decay [default: 0.0001]
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Ranking-loss margin [default: 0.1]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Batches between validation evaluations [default: 200]
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// RNG seed for weight init and batch shuffling [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    /// Trained model checkpoint (required)
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Corpus manifest: evaluate its test split pair by pair
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Directory of `<name>_level<k>.png` images: run Monte-Carlo trials
    #[arg(long, value_name = "DIR")]
    pub images: Option<PathBuf>,
    /// Monte-Carlo trial count (image-directory mode) [default: 150]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Crop side length, px (image-directory mode) [default: 128]
    #[arg(long)]
    pub crop: Option<usize>,
    /// Base RNG seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report directory, receives eval_pairs.csv (required)
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Also write eval_pairs.svg, a score-vs-level scatter
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug, Default)]
pub struct RankArgs {
    /// Trained model checkpoint (required)
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Registered input images, two or more (required)
    #[arg(long, value_name = "IMG", num_args = 1..)]
    pub images: Vec<PathBuf>,
    /// Report directory, receives rank_set.csv (required)
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Shared ROI budget [default: 8]
    #[arg(long)]
    pub max_rois: Option<usize>,
    /// Comma-separated expected ranks, one per image
    #[arg(long, value_name = "R1,R2,...")]
    pub expected: Option<String>,
    /// Also write rank_set.svg, an expected-vs-predicted scatter
    /// (requires --expected)
    #[arg(long)]
    pub svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    ExitCode::SUCCESS
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    let file = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenDataset(args) => {
            commands::gen::run(&config::resolve_gen(&args, file.gen_dataset)?)
        }
        Command::Train(args) => commands::train::run(&config::resolve_train(&args, file.train)?),
        Command::EvalPairs(args) => {
            commands::eval::run(&config::resolve_eval(&args, file.eval_pairs)?)
        }
        Command::RankSet(args) => commands::rank::run(&config::resolve_rank(&args, file.rank_set)?),
    }
}

/// Applies `RANKDIST_THREADS` to the global worker pool. All parallel code
/// paths are schedule-independent, so this only changes wall-clock time.
fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RANKDIST_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("RANKDIST_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Msg(format!("thread pool setup failed: {e}")))
}
