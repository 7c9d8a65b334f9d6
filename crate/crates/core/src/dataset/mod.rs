//! Ordered-pair corpus construction.
//!
//! The training signal is purely relative: two views of the same content at
//! different distortion levels, with the ground-truth order known from the
//! levels used to simulate them. This module draws level pairs, locates the
//! regions where the two views actually differ (via error-map window
//! scanning), cuts registered 32x32 patches, and persists everything with a
//! JSON Lines manifest so corpora are reproducible bit-for-bit from their
//! seed.

mod corpus;
mod manifest;
mod rois;

pub use corpus::{build_corpus, CorpusSource};
pub use manifest::{CorpusManifest, ManifestEntry, ManifestHeader, Split, SplitCounts};
pub use rois::{extract_rois, select_rois_from_map, ROI_STRIDE, SUPPORT_AREA_FRACTION, SUPPORT_TAU};

use rand::Rng;
use thiserror::Error;

use crate::distortion::{self, DistortionError, DistortionKind, DistortionSpec, LcaDirection};
use crate::imaging::{ImageError, ImageRgb, Patch, Rect};

/// LCA shift magnitudes are drawn uniformly from this range (pixels).
pub const LCA_LEVEL_RANGE: std::ops::Range<f64> = 1.0..5.0;

/// Moire resize factors are drawn uniformly from this range.
pub const MOIRE_LEVEL_RANGE: std::ops::Range<f64> = 1.5..10.0;

/// Minimum level gap between the two sides of a pair; closer draws are
/// redrawn because near-equal levels have no usable perceptual order.
pub const MIN_LEVEL_GAP: f64 = 0.25;

/// Errors from corpus construction and manifest handling.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error("no window qualifies as a region of interest (distortion too weak everywhere)")]
    NoQualifyingRoi,
    #[error("empty source list")]
    EmptySources,
    #[error("duplicate source id: {0}")]
    DuplicateSourceId(String),
    #[error("invalid ordered pair: {0}")]
    InvalidPair(String),
    #[error("invalid argument: {0}")]
    InvalidInput(String),
    #[error("manifest line {line}: {msg}")]
    ManifestParse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A registered patch pair with known distortion order.
///
/// `patch_a` is the less-distorted side — `spec_a.level < spec_b.level`
/// strictly, both specs share kind (and direction, for LCA), and both
/// patches were cut from the same source rectangle.
#[derive(Debug, Clone)]
pub struct OrderedPair {
    patch_a: Patch,
    patch_b: Patch,
    spec_a: DistortionSpec,
    spec_b: DistortionSpec,
    source_id: String,
    roi_rect: Rect,
}

impl OrderedPair {
    pub fn new(
        patch_a: Patch,
        patch_b: Patch,
        spec_a: DistortionSpec,
        spec_b: DistortionSpec,
        source_id: String,
        roi_rect: Rect,
    ) -> Result<Self, DatasetError> {
        let fail = |msg: String| Err(DatasetError::InvalidPair(msg));
        if spec_a.kind() != spec_b.kind() || spec_a.direction() != spec_b.direction() {
            return fail(format!("mismatched specs: {spec_a:?} vs {spec_b:?}"));
        }
        if spec_a.level().partial_cmp(&spec_b.level()) != Some(std::cmp::Ordering::Less) {
            return fail(format!(
                "levels must be strictly ordered, got {} vs {}",
                spec_a.level(),
                spec_b.level()
            ));
        }
        if patch_a.source_rect() != roi_rect || patch_b.source_rect() != roi_rect {
            return fail(format!(
                "patch rects {:?} / {:?} do not match roi {roi_rect:?}",
                patch_a.source_rect(),
                patch_b.source_rect()
            ));
        }
        Ok(OrderedPair {
            patch_a,
            patch_b,
            spec_a,
            spec_b,
            source_id,
            roi_rect,
        })
    }

    /// The less-distorted patch.
    pub fn patch_a(&self) -> &Patch {
        &self.patch_a
    }

    /// The more-distorted patch.
    pub fn patch_b(&self) -> &Patch {
        &self.patch_b
    }

    pub fn spec_a(&self) -> &DistortionSpec {
        &self.spec_a
    }

    pub fn spec_b(&self) -> &DistortionSpec {
        &self.spec_b
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn roi_rect(&self) -> Rect {
        self.roi_rect
    }
}

/// Draws two distortion levels for `kind` (redrawing until they differ by at
/// least [`MIN_LEVEL_GAP`]), simulates both, and returns the results ordered
/// least-distorted first.
///
/// For LCA a shared displacement diagonal is drawn before the levels.
pub fn make_ordered_images<R: Rng + ?Sized>(
    base: &ImageRgb,
    kind: DistortionKind,
    rng: &mut R,
) -> Result<(ImageRgb, ImageRgb, DistortionSpec, DistortionSpec), DatasetError> {
    let direction = match kind {
        DistortionKind::Lca => Some(if rng.gen::<bool>() {
            LcaDirection::MainDiagonal
        } else {
            LcaDirection::AntiDiagonal
        }),
        DistortionKind::Moire => None,
    };
    let range = match kind {
        DistortionKind::Lca => LCA_LEVEL_RANGE,
        DistortionKind::Moire => MOIRE_LEVEL_RANGE,
    };
    let (level_a, level_b) = loop {
        let l1 = rng.gen_range(range.clone());
        let l2 = rng.gen_range(range.clone());
        if (l1 - l2).abs() >= MIN_LEVEL_GAP {
            break if l1 < l2 { (l1, l2) } else { (l2, l1) };
        }
    };
    let make_spec = |level: f64| match kind {
        DistortionKind::Lca => DistortionSpec::Lca {
            shift: level,
            direction: direction.expect("direction drawn for LCA"),
        },
        DistortionKind::Moire => DistortionSpec::Moire { factor: level },
    };
    let spec_a = make_spec(level_a);
    let spec_b = make_spec(level_b);
    let img_a = distortion::apply(&spec_a, base)?;
    let img_b = distortion::apply(&spec_b, base)?;
    Ok((img_a, img_b, spec_a, spec_b))
}
