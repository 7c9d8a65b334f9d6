//! Turning patch scores into ordering decisions.
//!
//! The scorer assigns each patch one real number; everything here is pure
//! comparison logic on top of that. Two patches are ordered by comparing
//! scores (with a small tie threshold). Two images are ordered by majority
//! vote over their registered ROI patches. An image *set* is ranked by
//! ranking each ROI's scores across the images and taking each image's
//! median rank, re-ranked into a proper rank vector. Accuracy metrics:
//! pairwise true-positive rate, and the median Spearman correlation of the
//! per-patch rankings against the expected order.
//!
//! Everything is deterministic given a model; the Monte-Carlo harness in
//! [`monte_carlo_pairs`]/[`monte_carlo_sets`] derives an independent RNG
//! per trial, so its results do not depend on scheduling either.

mod monte_carlo;

pub use monte_carlo::{
    monte_carlo_pairs, monte_carlo_sets, McPairTrial, McPairsReport, McSetTrial, McSetsReport,
    MAX_MC_ROIS, MC_CROP_RESAMPLES,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::OrderedPair;
use crate::imaging::{average_ranks, spearman, ImageError, ImageRgb, Patch, RankVector, Rect};
use crate::model::ScorerModel;

/// Two scores within this distance count as a tie.
pub const TIE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("input is empty")]
    EmptyInput,
    #[error("roi lists have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no rois to compare")]
    EmptyRois,
    #[error("every score row is constant; ranking is undefined")]
    DegenerateMatrix,
    #[error("not enough images: {0}")]
    InsufficientImages(String),
    #[error("n_trials must be >= 1")]
    NoTrials,
    #[error("all {0} trials were skipped (no qualifying rois)")]
    AllTrialsSkipped(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Rank(#[from] ImageError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

/// Outcome of comparing two patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchOrder {
    /// The first patch scored lower: predicted less distorted.
    FirstLess,
    SecondLess,
    Tie,
}

/// Outcome of the ROI majority vote between two images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairDecision {
    ALessDistorted,
    BLessDistorted,
    Tie,
}

impl std::fmt::Display for PairDecision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairDecision::ALessDistorted => write!(f, "a-less-distorted"),
            PairDecision::BLessDistorted => write!(f, "b-less-distorted"),
            PairDecision::Tie => write!(f, "tie"),
        }
    }
}

/// Vote breakdown for an image pair; `votes_a + votes_b + ties` equals the
/// number of ROIs compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairVerdict {
    pub decision: PairDecision,
    pub votes_a: usize,
    pub votes_b: usize,
    pub ties: usize,
}

/// Scores of I registered ROI patches across J images: `rows()[i][j]` is
/// the score of image `j`'s patch at ROI `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    scores: Vec<Vec<f64>>,
    patch_rects: Vec<Rect>,
    image_ids: Vec<String>,
}

impl ScoreMatrix {
    pub fn new(
        scores: Vec<Vec<f64>>,
        patch_rects: Vec<Rect>,
        image_ids: Vec<String>,
    ) -> Result<Self, RankingError> {
        let fail = |msg: String| Err(RankingError::InvalidInput(msg));
        if scores.is_empty() {
            return Err(RankingError::EmptyInput);
        }
        if image_ids.len() < 2 {
            return fail(format!("need at least 2 images, got {}", image_ids.len()));
        }
        if patch_rects.len() != scores.len() {
            return fail(format!(
                "{} rois for {} score rows",
                patch_rects.len(),
                scores.len()
            ));
        }
        for (i, row) in scores.iter().enumerate() {
            if row.len() != image_ids.len() {
                return fail(format!(
                    "row {i} has {} scores for {} images",
                    row.len(),
                    image_ids.len()
                ));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return fail(format!("row {i} contains non-finite score {v}"));
            }
        }
        Ok(ScoreMatrix {
            scores,
            patch_rects,
            image_ids,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn patch_rects(&self) -> &[Rect] {
        &self.patch_rects
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn n_patches(&self) -> usize {
        self.scores.len()
    }

    pub fn n_images(&self) -> usize {
        self.image_ids.len()
    }
}

/// Scores every image at every shared ROI rectangle.
pub fn score_images(
    model: &ScorerModel,
    images: &[ImageRgb],
    ids: &[String],
    rois: &[Rect],
) -> Result<ScoreMatrix, RankingError> {
    if images.len() != ids.len() {
        return Err(RankingError::LengthMismatch {
            left: images.len(),
            right: ids.len(),
        });
    }
    let scores = rois
        .iter()
        .map(|&roi| {
            images
                .iter()
                .map(|img| Ok(model.forward(&Patch::from_image(img, roi)?)))
                .collect::<Result<Vec<f64>, ImageError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    ScoreMatrix::new(scores, rois.to_vec(), ids.to_vec())
}

/// Orders two registered patches by score; ties within [`TIE_THRESHOLD`].
pub fn order_patch_pair(model: &ScorerModel, r_a: &Patch, r_b: &Patch) -> PatchOrder {
    let diff = model.forward(r_a) - model.forward(r_b);
    if diff.abs() <= TIE_THRESHOLD {
        PatchOrder::Tie
    } else if diff < 0.0 {
        PatchOrder::FirstLess
    } else {
        PatchOrder::SecondLess
    }
}

/// Majority vote of [`order_patch_pair`] over index-registered ROI lists.
/// Equal votes — including the all-ties case — yield a tie verdict.
pub fn order_image_pair(
    model: &ScorerModel,
    rois_a: &[Patch],
    rois_b: &[Patch],
) -> Result<PairVerdict, RankingError> {
    if rois_a.len() != rois_b.len() {
        return Err(RankingError::LengthMismatch {
            left: rois_a.len(),
            right: rois_b.len(),
        });
    }
    if rois_a.is_empty() {
        return Err(RankingError::EmptyRois);
    }
    let (mut votes_a, mut votes_b, mut ties) = (0, 0, 0);
    for (a, b) in rois_a.iter().zip(rois_b) {
        match order_patch_pair(model, a, b) {
            PatchOrder::FirstLess => votes_a += 1,
            PatchOrder::SecondLess => votes_b += 1,
            PatchOrder::Tie => ties += 1,
        }
    }
    let decision = match votes_a.cmp(&votes_b) {
        std::cmp::Ordering::Greater => PairDecision::ALessDistorted,
        std::cmp::Ordering::Less => PairDecision::BLessDistorted,
        std::cmp::Ordering::Equal => PairDecision::Tie,
    };
    Ok(PairVerdict {
        decision,
        votes_a,
        votes_b,
        ties,
    })
}

/// Ranks an image set from a score matrix.
///
/// Each ROI row is ranked across the images with average ranks (so within a
/// row, less distorted ⇒ lower rank). Each image then takes the median of
/// its per-ROI ranks, and the medians are re-ranked so the result is a
/// proper rank vector over 1..=J (medians of even-sized rank sets land on
/// half-integers, hence the re-rank). Returns the image ranks and the
/// per-ROI rank rows. Rows with all-equal scores are kept (they contribute
/// a constant rank row); if every row is constant the ranking is undefined.
pub fn rank_image_set(scores: &ScoreMatrix) -> Result<(RankVector, Vec<RankVector>), RankingError> {
    let mut per_patch = Vec::with_capacity(scores.n_patches());
    let mut any_informative = false;
    for row in scores.rows() {
        if row.iter().any(|&v| v != row[0]) {
            any_informative = true;
        }
        per_patch.push(average_ranks(row)?);
    }
    if !any_informative {
        return Err(RankingError::DegenerateMatrix);
    }
    let medians: Vec<f64> = (0..scores.n_images())
        .map(|j| median(per_patch.iter().map(|r| r.ranks()[j]).collect()))
        .collect();
    let image_ranks = average_ranks(&medians)?;
    Ok((image_ranks, per_patch))
}

/// Median with the usual mean-of-two-central convention for even counts.
fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Percentage of pairs whose less-distorted patch got the lower score.
/// Ties count as failures.
pub fn tp_rate(model: &ScorerModel, labeled_pairs: &[OrderedPair]) -> Result<f64, RankingError> {
    if labeled_pairs.is_empty() {
        return Err(RankingError::EmptyInput);
    }
    let correct = labeled_pairs
        .par_iter()
        .filter(|pair| order_patch_pair(model, pair.patch_a(), pair.patch_b()) == PatchOrder::FirstLess)
        .count();
    Ok(100.0 * correct as f64 / labeled_pairs.len() as f64)
}

/// Median Spearman correlation of per-ROI rank rows against the expected
/// image ranking, with zero-variance rows skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetRankAccuracy {
    pub median_rho: f64,
    pub skipped_rows: usize,
}

pub fn set_rank_accuracy(
    predicted: &[RankVector],
    expected: &RankVector,
) -> Result<SetRankAccuracy, RankingError> {
    if predicted.is_empty() {
        return Err(RankingError::EmptyInput);
    }
    let mut rhos = Vec::with_capacity(predicted.len());
    let mut skipped_rows = 0;
    for row in predicted {
        if row.len() != expected.len() {
            return Err(RankingError::LengthMismatch {
                left: row.len(),
                right: expected.len(),
            });
        }
        match spearman(row, expected) {
            Ok(rho) => rhos.push(rho),
            Err(ImageError::DegenerateInput) => skipped_rows += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if rhos.is_empty() {
        return Err(RankingError::DegenerateMatrix);
    }
    Ok(SetRankAccuracy {
        median_rho: median(rhos),
        skipped_rows,
    })
}
