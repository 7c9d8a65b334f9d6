//! Region-of-interest extraction by error-map window scanning.

use super::DatasetError;
use crate::imaging::{error_map, ErrorMap, ImageRgb, Rect, PATCH_SIZE};

/// Step between candidate window origins, both axes.
pub const ROI_STRIDE: usize = 16;

/// A pixel counts toward a window's support if its error exceeds this
/// (two 8-bit quantization steps — below that is indistinguishable noise).
pub const SUPPORT_TAU: f64 = 2.0 / 255.0;

/// A window qualifies only if its support pixel count exceeds this fraction
/// of the full image area (0.025%).
pub const SUPPORT_AREA_FRACTION: f64 = 0.00025;

/// Locates up to `max_rois` non-overlapping 32x32 windows where `img_a` and
/// `img_b` differ the most.
///
/// Windows start at multiples of [`ROI_STRIDE`] and must lie fully inside
/// the image. Each is scored by the sum of the error map inside it;
/// selection is greedy by descending score (ties broken by y, then x), and a
/// window qualifies only if more than 0.025% of the image's pixel count,
/// counted inside the window, differ by more than [`SUPPORT_TAU`].
pub fn extract_rois(
    img_a: &ImageRgb,
    img_b: &ImageRgb,
    max_rois: usize,
) -> Result<Vec<Rect>, DatasetError> {
    let map = error_map(img_a, img_b)?;
    select_rois_from_map(&map, max_rois)
}

/// The window scan of [`extract_rois`], on an arbitrary error map.
///
/// Exposed separately so set ranking can select windows from an aggregate
/// map (one summed over several images) with identical mechanics.
pub fn select_rois_from_map(map: &ErrorMap, max_rois: usize) -> Result<Vec<Rect>, DatasetError> {
    if max_rois == 0 {
        return Err(DatasetError::InvalidInput("max_rois must be >= 1".into()));
    }
    let (w, h) = (map.width(), map.height());
    if w < PATCH_SIZE || h < PATCH_SIZE {
        return Err(DatasetError::InvalidInput(format!(
            "{w}x{h} image smaller than the {PATCH_SIZE}px window"
        )));
    }
    let support_needed = SUPPORT_AREA_FRACTION * (w * h) as f64;
    let mut candidates: Vec<(f64, Rect)> = Vec::new();
    for y in (0..=h - PATCH_SIZE).step_by(ROI_STRIDE) {
        for x in (0..=w - PATCH_SIZE).step_by(ROI_STRIDE) {
            let rect = Rect::new(x, y, PATCH_SIZE, PATCH_SIZE);
            if window_support(map, rect) as f64 > support_needed {
                candidates.push((map.sum_over(rect), rect));
            }
        }
    }
    candidates.sort_by(|(sa, ra), (sb, rb)| {
        sb.total_cmp(sa)
            .then(ra.y.cmp(&rb.y))
            .then(ra.x.cmp(&rb.x))
    });
    let mut selected: Vec<Rect> = Vec::new();
    for (_, rect) in candidates {
        if selected.len() == max_rois {
            break;
        }
        if selected.iter().all(|s| !s.overlaps(&rect)) {
            selected.push(rect);
        }
    }
    if selected.is_empty() {
        return Err(DatasetError::NoQualifyingRoi);
    }
    Ok(selected)
}

/// Number of pixels inside `rect` whose error exceeds [`SUPPORT_TAU`].
fn window_support(map: &ErrorMap, rect: Rect) -> usize {
    let mut count = 0;
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            if f64::from(map.get(x, y)) > SUPPORT_TAU {
                count += 1;
            }
        }
    }
    count
}
