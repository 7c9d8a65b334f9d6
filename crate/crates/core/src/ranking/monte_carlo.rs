//! Monte-Carlo crop experiments over a labeled image set.
//!
//! Each trial samples images from the set, cuts the same random crop from
//! all of them (so the views stay registered), finds the strongest shared
//! ROIs, and scores the model's ordering decision against the images' known
//! distortion levels. Crops where no ROI qualifies (e.g. featureless
//! regions) are redrawn a bounded number of times and then skipped.
//!
//! Every trial runs from its own seed derived from (base seed, trial
//! index), so the harness is deterministic and schedule-independent even
//! when trials run in parallel.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    order_image_pair, rank_image_set, score_images, set_rank_accuracy, PairDecision, RankingError,
};
use crate::dataset::{extract_rois, select_rois_from_map, DatasetError};
use crate::imaging::{average_ranks, crop, error_map, ImageRgb, Patch, Rect, PATCH_SIZE};
use crate::model::ScorerModel;
use crate::seeding;

/// ROI budget per trial.
pub const MAX_MC_ROIS: usize = 8;

/// How many times a trial redraws its crop after a no-qualifying-ROI result
/// before the trial is skipped.
pub const MC_CROP_RESAMPLES: usize = 20;

/// One pair trial: either a scored decision or a skip.
#[derive(Debug, Clone, PartialEq)]
pub enum McPairTrial {
    Decided {
        decision: PairDecision,
        /// Whether the decision matches the level order.
        correct: bool,
        n_rois: usize,
    },
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McPairsReport {
    /// Percentage of decided trials with the correct verdict (ties count
    /// as failures).
    pub tp_percent: f64,
    pub decided: usize,
    pub skipped: usize,
    pub trials: Vec<McPairTrial>,
}

/// One set trial: either a ranking correlation or a skip.
#[derive(Debug, Clone, PartialEq)]
pub enum McSetTrial {
    Ranked { rho: f64, n_rois: usize },
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSetsReport {
    /// Median over ranked trials of the per-trial median Spearman ρ.
    pub median_rho: f64,
    pub ranked: usize,
    pub skipped: usize,
    pub trials: Vec<McSetTrial>,
}

/// Pairwise ordering accuracy over random crops.
///
/// Per trial: two images with different levels, one shared random
/// `crop_size`² crop, ROIs from the crops' error map, then the majority
/// vote of [`order_image_pair`]. The verdict is correct when it names the
/// lower-level image as less distorted.
pub fn monte_carlo_pairs(
    image_set: &[(ImageRgb, f64)],
    model: &ScorerModel,
    n_trials: usize,
    crop_size: usize,
    seed: u64,
) -> Result<McPairsReport, RankingError> {
    let (w, h) = validate_set(image_set, crop_size, 2)?;
    if n_trials == 0 {
        return Err(RankingError::NoTrials);
    }
    let trials: Vec<McPairTrial> = (0..n_trials)
        .into_par_iter()
        .map(|t| pair_trial(image_set, model, crop_size, (w, h), seeding::derive_seed(seed, t as u64)))
        .collect::<Result<_, _>>()?;
    let decided = trials
        .iter()
        .filter(|t| matches!(t, McPairTrial::Decided { .. }))
        .count();
    if decided == 0 {
        return Err(RankingError::AllTrialsSkipped(n_trials));
    }
    let correct = trials
        .iter()
        .filter(|t| matches!(t, McPairTrial::Decided { correct: true, .. }))
        .count();
    Ok(McPairsReport {
        tp_percent: 100.0 * correct as f64 / decided as f64,
        decided,
        skipped: n_trials - decided,
        trials,
    })
}

/// Set-ranking accuracy over random crops.
///
/// Per trial: `set_size` images with pairwise-distinct levels, one shared
/// crop, ROIs from the error map of the least- vs most-distorted member,
/// a score matrix over all members, [`rank_image_set`], and the median
/// Spearman ρ of the per-ROI rankings against the level order. Trials whose
/// score matrix is fully degenerate are skipped and counted.
pub fn monte_carlo_sets(
    image_set: &[(ImageRgb, f64)],
    model: &ScorerModel,
    n_trials: usize,
    set_size: usize,
    crop_size: usize,
    seed: u64,
) -> Result<McSetsReport, RankingError> {
    if set_size < 2 {
        return Err(RankingError::InvalidInput(
            "set_size must be >= 2".into(),
        ));
    }
    let (w, h) = validate_set(image_set, crop_size, set_size)?;
    if n_trials == 0 {
        return Err(RankingError::NoTrials);
    }
    let trials: Vec<McSetTrial> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            set_trial(
                image_set,
                model,
                set_size,
                crop_size,
                (w, h),
                seeding::derive_seed(seed, t as u64),
            )
        })
        .collect::<Result<_, _>>()?;
    let rhos: Vec<f64> = trials
        .iter()
        .filter_map(|t| match t {
            McSetTrial::Ranked { rho, .. } => Some(*rho),
            McSetTrial::Skipped => None,
        })
        .collect();
    if rhos.is_empty() {
        return Err(RankingError::AllTrialsSkipped(n_trials));
    }
    let ranked = rhos.len();
    Ok(McSetsReport {
        median_rho: super::median(rhos),
        ranked,
        skipped: n_trials - ranked,
        trials,
    })
}

/// Checks set shape: uniform dimensions that fit the crop, finite levels,
/// and at least `need_distinct` distinct level values.
fn validate_set(
    image_set: &[(ImageRgb, f64)],
    crop_size: usize,
    need_distinct: usize,
) -> Result<(usize, usize), RankingError> {
    if image_set.is_empty() {
        return Err(RankingError::InsufficientImages("the set is empty".into()));
    }
    let (w, h) = (image_set[0].0.width(), image_set[0].0.height());
    for (img, level) in image_set {
        if (img.width(), img.height()) != (w, h) {
            return Err(RankingError::InvalidInput(format!(
                "images must share dimensions: {}×{} vs {w}×{h}",
                img.width(),
                img.height()
            )));
        }
        if !level.is_finite() {
            return Err(RankingError::InvalidInput(format!(
                "non-finite level {level}"
            )));
        }
    }
    if crop_size < PATCH_SIZE {
        return Err(RankingError::InvalidInput(format!(
            "crop size {crop_size} is below the patch size {PATCH_SIZE}"
        )));
    }
    if crop_size > w || crop_size > h {
        return Err(RankingError::InvalidInput(format!(
            "crop size {crop_size} exceeds the image size {w}×{h}"
        )));
    }
    let mut levels: Vec<f64> = image_set.iter().map(|(_, l)| *l).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < need_distinct {
        return Err(RankingError::InsufficientImages(format!(
            "need {need_distinct} distinct levels, the set has {}",
            levels.len()
        )));
    }
    Ok((w, h))
}

fn sample_rect<R: Rng + ?Sized>(rng: &mut R, (w, h): (usize, usize), crop_size: usize) -> Rect {
    let x = rng.gen_range(0..=w - crop_size);
    let y = rng.gen_range(0..=h - crop_size);
    Rect::new(x, y, crop_size, crop_size)
}

fn pair_trial(
    image_set: &[(ImageRgb, f64)],
    model: &ScorerModel,
    crop_size: usize,
    dims: (usize, usize),
    trial_seed: u64,
) -> Result<McPairTrial, RankingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let n = image_set.len();
    let i = rng.gen_range(0..n);
    let j = loop {
        let j = rng.gen_range(0..n);
        if image_set[j].1 != image_set[i].1 {
            break j;
        }
    };
    for _ in 0..=MC_CROP_RESAMPLES {
        let rect = sample_rect(&mut rng, dims, crop_size);
        let crop_a = crop(&image_set[i].0, rect)?;
        let crop_b = crop(&image_set[j].0, rect)?;
        match extract_rois(&crop_a, &crop_b, MAX_MC_ROIS) {
            Ok(rois) => {
                let patches_a: Vec<Patch> = rois
                    .iter()
                    .map(|&r| Patch::from_image(&crop_a, r))
                    .collect::<Result<_, _>>()?;
                let patches_b: Vec<Patch> = rois
                    .iter()
                    .map(|&r| Patch::from_image(&crop_b, r))
                    .collect::<Result<_, _>>()?;
                let verdict = order_image_pair(model, &patches_a, &patches_b)?;
                let correct = if image_set[i].1 < image_set[j].1 {
                    verdict.decision == PairDecision::ALessDistorted
                } else {
                    verdict.decision == PairDecision::BLessDistorted
                };
                return Ok(McPairTrial::Decided {
                    decision: verdict.decision,
                    correct,
                    n_rois: rois.len(),
                });
            }
            Err(DatasetError::NoQualifyingRoi) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(McPairTrial::Skipped)
}

fn set_trial(
    image_set: &[(ImageRgb, f64)],
    model: &ScorerModel,
    set_size: usize,
    crop_size: usize,
    dims: (usize, usize),
    trial_seed: u64,
) -> Result<McSetTrial, RankingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    // A random subset with pairwise-distinct levels: shuffle, then greedily
    // take the first image of each unseen level.
    let mut order: Vec<usize> = (0..image_set.len()).collect();
    order.shuffle(&mut rng);
    let mut chosen: Vec<usize> = Vec::with_capacity(set_size);
    for idx in order {
        if chosen.iter().all(|&c| image_set[c].1 != image_set[idx].1) {
            chosen.push(idx);
            if chosen.len() == set_size {
                break;
            }
        }
    }
    debug_assert_eq!(chosen.len(), set_size, "distinct levels were pre-checked");
    let levels: Vec<f64> = chosen.iter().map(|&c| image_set[c].1).collect();
    let lo = (0..set_size)
        .min_by(|&a, &b| levels[a].total_cmp(&levels[b]))
        .expect("set_size >= 2");
    let hi = (0..set_size)
        .max_by(|&a, &b| levels[a].total_cmp(&levels[b]))
        .expect("set_size >= 2");

    for _ in 0..=MC_CROP_RESAMPLES {
        let rect = sample_rect(&mut rng, dims, crop_size);
        let crops: Vec<ImageRgb> = chosen
            .iter()
            .map(|&c| crop(&image_set[c].0, rect))
            .collect::<Result<_, _>>()?;
        // The widest level gap shows the distortion most clearly, so that
        // pair nominates the shared ROIs.
        let map = error_map(&crops[lo], &crops[hi])?;
        match select_rois_from_map(&map, MAX_MC_ROIS) {
            Ok(rois) => {
                let ids: Vec<String> = chosen.iter().map(|&c| format!("img{c}")).collect();
                let matrix = score_images(model, &crops, &ids, &rois)?;
                let per_patch = match rank_image_set(&matrix) {
                    Ok((_, per_patch)) => per_patch,
                    Err(RankingError::DegenerateMatrix) => return Ok(McSetTrial::Skipped),
                    Err(e) => return Err(e),
                };
                let expected = average_ranks(&levels)?;
                let acc = match set_rank_accuracy(&per_patch, &expected) {
                    Ok(acc) => acc,
                    Err(RankingError::DegenerateMatrix) => return Ok(McSetTrial::Skipped),
                    Err(e) => return Err(e),
                };
                return Ok(McSetTrial::Ranked {
                    rho: acc.median_rho,
                    n_rois: rois.len(),
                });
            }
            Err(DatasetError::NoQualifyingRoi) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(McSetTrial::Skipped)
}
