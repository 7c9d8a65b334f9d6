//! Optional JSON config files and flag/default resolution.
//!
//! A config file holds one section per subcommand, each mirroring that
//! command's flags. Explicit flags always win over file values, which win
//! over built-in defaults; required settings may come from either place.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use rankdist_core::distortion::DistortionKind;
use rankdist_core::model::TrainConfig;

use crate::{usage, CliError, EvalArgs, GenArgs, KindArg, RankArgs, TrainArgs};

/// Parsed `--config` file; every section and field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub gen_dataset: Option<GenOverrides>,
    #[serde(default)]
    pub train: Option<TrainOverrides>,
    #[serde(default)]
    pub eval_pairs: Option<EvalOverrides>,
    #[serde(default)]
    pub rank_set: Option<RankOverrides>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenOverrides {
    pub kind: Option<KindArg>,
    pub sources: Option<String>,
    pub out: Option<PathBuf>,
    pub count: Option<usize>,
    pub pairs_per_source: Option<usize>,
    pub max_rois: Option<usize>,
    pub size: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOverrides {
    pub manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub epsilon: Option<f64>,
    pub eval_every: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOverrides {
    pub checkpoint: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub trials: Option<usize>,
    pub crop: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub svg: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankOverrides {
    pub checkpoint: Option<PathBuf>,
    pub images: Option<Vec<PathBuf>>,
    pub out_dir: Option<PathBuf>,
    pub max_rois: Option<usize>,
    pub expected: Option<String>,
    pub svg: Option<bool>,
}

/// Loads and parses `--config`, or returns an all-empty config.
pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("missing required {flag} (flag or config value)")))
}

/// Where corpus sources come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    /// Draw random synthetic test charts.
    Synthetic,
    /// Load every PNG in the directory.
    Dir(PathBuf),
}

#[derive(Debug)]
pub struct GenSettings {
    pub kind: DistortionKind,
    pub sources: SourceSpec,
    pub out: PathBuf,
    pub count: usize,
    pub pairs_per_source: usize,
    pub max_rois: usize,
    pub size: usize,
    pub seed: u64,
}

pub fn resolve_gen(args: &GenArgs, file: Option<GenOverrides>) -> Result<GenSettings, CliError> {
    let file = file.unwrap_or_default();
    let kind = require(args.kind.or(file.kind), "--kind")?;
    let sources_raw = require(args.sources.clone().or(file.sources), "--sources")?;
    let sources = if sources_raw == "synthetic" {
        SourceSpec::Synthetic
    } else {
        SourceSpec::Dir(PathBuf::from(sources_raw))
    };
    let size = args.size.or(file.size).unwrap_or(match kind {
        KindArg::Moire => 320,
        KindArg::Lca => 192,
    });
    Ok(GenSettings {
        kind: kind.into(),
        sources,
        out: require(args.out.clone().or(file.out), "--out")?,
        count: args.count.or(file.count).unwrap_or(50),
        pairs_per_source: args.pairs_per_source.or(file.pairs_per_source).unwrap_or(6),
        max_rois: args.max_rois.or(file.max_rois).unwrap_or(8),
        size,
        seed: args.seed.or(file.seed).unwrap_or(0),
    })
}

#[derive(Debug)]
pub struct TrainSettings {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub config: TrainConfig,
}

pub fn resolve_train(
    args: &TrainArgs,
    file: Option<TrainOverrides>,
) -> Result<TrainSettings, CliError> {
    let file = file.unwrap_or_default();
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        epochs: args.epochs.or(file.epochs).unwrap_or(defaults.epochs),
        batch_size: args
            .batch_size
            .or(file.batch_size)
            .unwrap_or(defaults.batch_size),
        learning_rate: args
            .learning_rate
            .or(file.learning_rate)
            .unwrap_or(defaults.learning_rate),
        momentum: args.momentum.or(file.momentum).unwrap_or(defaults.momentum),
        weight_decay: args
            .weight_decay
            .or(file.weight_decay)
            .unwrap_or(defaults.weight_decay),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        eval_every: args
            .eval_every
            .or(file.eval_every)
            .unwrap_or(defaults.eval_every),
    };
    Ok(TrainSettings {
        manifest: require(args.manifest.clone().or(file.manifest), "--manifest")?,
        out_dir: require(args.out_dir.clone().or(file.out_dir), "--out-dir")?,
        config,
    })
}

/// What eval-pairs evaluates against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalInput {
    Manifest(PathBuf),
    Images(PathBuf),
}

#[derive(Debug)]
pub struct EvalSettings {
    pub checkpoint: PathBuf,
    pub input: EvalInput,
    pub trials: usize,
    pub crop: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub svg: bool,
}

pub fn resolve_eval(args: &EvalArgs, file: Option<EvalOverrides>) -> Result<EvalSettings, CliError> {
    let file = file.unwrap_or_default();
    let manifest = args.manifest.clone().or(file.manifest);
    let images = args.images.clone().or(file.images);
    let input = match (manifest, images) {
        (Some(m), None) => EvalInput::Manifest(m),
        (None, Some(d)) => EvalInput::Images(d),
        _ => return Err(usage("exactly one of --manifest or --images is required")),
    };
    Ok(EvalSettings {
        checkpoint: require(args.checkpoint.clone().or(file.checkpoint), "--checkpoint")?,
        input,
        trials: args.trials.or(file.trials).unwrap_or(150),
        crop: args.crop.or(file.crop).unwrap_or(128),
        seed: args.seed.or(file.seed).unwrap_or(0),
        out_dir: require(args.out_dir.clone().or(file.out_dir), "--out-dir")?,
        svg: args.svg || file.svg.unwrap_or(false),
    })
}

#[derive(Debug)]
pub struct RankSettings {
    pub checkpoint: PathBuf,
    pub images: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub max_rois: usize,
    pub expected: Option<Vec<f64>>,
    pub svg: bool,
}

pub fn resolve_rank(args: &RankArgs, file: Option<RankOverrides>) -> Result<RankSettings, CliError> {
    let file = file.unwrap_or_default();
    let images = if args.images.is_empty() {
        file.images.unwrap_or_default()
    } else {
        args.images.clone()
    };
    if images.len() < 2 {
        return Err(usage("--images needs at least two image paths"));
    }
    let expected = match args.expected.clone().or(file.expected) {
        Some(raw) => Some(parse_expected(&raw, images.len())?),
        None => None,
    };
    let svg = args.svg || file.svg.unwrap_or(false);
    if svg && expected.is_none() {
        return Err(usage("--svg needs --expected ranks to plot against"));
    }
    Ok(RankSettings {
        checkpoint: require(args.checkpoint.clone().or(file.checkpoint), "--checkpoint")?,
        images,
        out_dir: require(args.out_dir.clone().or(file.out_dir), "--out-dir")?,
        max_rois: args.max_rois.or(file.max_rois).unwrap_or(8),
        expected,
        svg,
    })
}

fn parse_expected(raw: &str, n_images: usize) -> Result<Vec<f64>, CliError> {
    let ranks: Vec<f64> = raw
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .ok()
                .filter(|r| r.is_finite())
                .ok_or_else(|| usage(format!("bad rank `{part}` in --expected")))
        })
        .collect::<Result<_, _>>()?;
    if ranks.len() != n_images {
        return Err(usage(format!(
            "--expected lists {} ranks for {n_images} images",
            ranks.len()
        )));
    }
    Ok(ranks)
}
