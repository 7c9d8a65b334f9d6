//! `eval-pairs`: pairwise ordering accuracy of a trained scorer.
//!
//! Manifest mode scores every held-out test pair directly. Image-directory
//! mode runs seeded Monte-Carlo trials: random image pairs, random shared
//! crops, ROI extraction, majority vote.

use std::fs;
use std::path::Path;

use rankdist_core::dataset::{CorpusManifest, Split};
use rankdist_core::imaging::ImageRgb;
use rankdist_core::model::{load_checkpoint, ScorerModel};
use rankdist_core::ranking::{monte_carlo_pairs, order_patch_pair, tp_rate, McPairTrial, PatchOrder};

use crate::config::{EvalInput, EvalSettings};
use crate::report::{write_csv, write_scatter, Scatter};
use crate::{commands, sources, CliError};

pub fn run(settings: &EvalSettings) -> Result<(), CliError> {
    println!("seed: {}", settings.seed);
    let model = load_checkpoint(&settings.checkpoint)?;
    fs::create_dir_all(&settings.out_dir)?;
    match &settings.input {
        EvalInput::Manifest(path) => eval_manifest(&model, path, settings),
        EvalInput::Images(dir) => eval_images(&model, dir, settings),
    }
}

fn order_name(order: PatchOrder) -> &'static str {
    match order {
        PatchOrder::FirstLess => "a-less-distorted",
        PatchOrder::SecondLess => "b-less-distorted",
        PatchOrder::Tie => "tie",
    }
}

fn eval_manifest(
    model: &ScorerModel,
    path: &Path,
    settings: &EvalSettings,
) -> Result<(), CliError> {
    let manifest = CorpusManifest::read(path)?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    let pairs = manifest.load_pairs(base_dir, Split::Test)?;
    if pairs.is_empty() {
        return Err(CliError::Msg(format!(
            "the manifest {} has no test-split pairs",
            path.display()
        )));
    }
    let tp = tp_rate(model, &pairs)?;

    let mut rows = Vec::with_capacity(pairs.len());
    let mut points = Vec::with_capacity(2 * pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let score_a = model.forward(pair.patch_a());
        let score_b = model.forward(pair.patch_b());
        let order = order_patch_pair(model, pair.patch_a(), pair.patch_b());
        let (level_a, level_b) = (pair.spec_a().level(), pair.spec_b().level());
        rows.push(vec![
            i.to_string(),
            pair.source_id().to_string(),
            level_a.to_string(),
            level_b.to_string(),
            score_a.to_string(),
            score_b.to_string(),
            order_name(order).to_string(),
            (order == PatchOrder::FirstLess).to_string(),
        ]);
        points.push((level_a, score_a));
        points.push((level_b, score_b));
    }
    write_csv(
        &settings.out_dir.join("eval_pairs.csv"),
        &[
            "pair",
            "source_id",
            "level_a",
            "level_b",
            "score_a",
            "score_b",
            "predicted",
            "correct",
        ],
        rows,
    )?;
    if settings.svg {
        write_scatter(
            &settings.out_dir.join("eval_pairs.svg"),
            &Scatter {
                x_label: "distortion level",
                y_label: "model score",
                points: &points,
                diagonal: false,
            },
        )?;
    }
    println!("pairs: {}", pairs.len());
    println!("TP: {:.2}%", tp);
    Ok(())
}

fn eval_images(model: &ScorerModel, dir: &Path, settings: &EvalSettings) -> Result<(), CliError> {
    let labeled = sources::load_leveled_dir(dir)?;
    println!("images: {}", labeled.len());
    let set: Vec<(ImageRgb, f64)> = labeled
        .iter()
        .map(|(_, img, level)| (img.clone(), *level))
        .collect();
    let report = monte_carlo_pairs(&set, model, settings.trials, settings.crop, settings.seed)?;

    let rows = report.trials.iter().enumerate().map(|(i, trial)| match trial {
        McPairTrial::Decided {
            decision,
            correct,
            n_rois,
        } => vec![
            i.to_string(),
            "decided".to_string(),
            decision.to_string(),
            correct.to_string(),
            n_rois.to_string(),
        ],
        McPairTrial::Skipped => vec![
            i.to_string(),
            "skipped".to_string(),
            String::new(),
            String::new(),
            String::new(),
        ],
    });
    write_csv(
        &settings.out_dir.join("eval_pairs.csv"),
        &["trial", "outcome", "decision", "correct", "n_rois"],
        rows,
    )?;
    if settings.svg {
        // One point per image: its mean score over the set's shared ROIs
        // against the level its file name declares.
        let images: Vec<ImageRgb> = set.iter().map(|(img, _)| img.clone()).collect();
        let rois = commands::shared_rois(&images, rankdist_core::ranking::MAX_MC_ROIS)?;
        let mut points = Vec::with_capacity(set.len());
        for (img, level) in &set {
            points.push((*level, commands::mean_roi_score(model, img, &rois)?));
        }
        write_scatter(
            &settings.out_dir.join("eval_pairs.svg"),
            &Scatter {
                x_label: "distortion level",
                y_label: "mean ROI score",
                points: &points,
                diagonal: false,
            },
        )?;
    }
    println!(
        "trials: {} (decided {}, skipped {})",
        report.trials.len(),
        report.decided,
        report.skipped
    );
    println!("TP: {:.2}%", report.tp_percent);
    Ok(())
}
