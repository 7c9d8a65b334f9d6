//! Subcommand implementations.

pub mod eval;
pub mod gen;
pub mod rank;
pub mod train;

use rankdist_core::dataset::select_rois_from_map;
use rankdist_core::imaging::{error_map, ErrorMap, ImageRgb, Patch, Rect};
use rankdist_core::model::ScorerModel;

use crate::CliError;

/// Elementwise-median image of a nonempty, same-sized set. Acts as the
/// set's least-distorted consensus: each member's deviations from it mark
/// where that member's distortion lives.
fn median_image(images: &[ImageRgb]) -> ImageRgb {
    let (w, h) = (images[0].width(), images[0].height());
    let mut column = Vec::with_capacity(images.len());
    let data = (0..w * h * 3)
        .map(|i| {
            column.clear();
            column.extend(images.iter().map(|img| img.data()[i]));
            column.sort_by(f32::total_cmp);
            let m = column.len() / 2;
            if column.len() % 2 == 1 {
                column[m]
            } else {
                (column[m - 1] + column[m]) / 2.0
            }
        })
        .collect();
    ImageRgb::from_data(w, h, data).expect("medians of valid samples are valid samples")
}

/// ROIs shared by a whole image set: the per-image error maps against the
/// elementwise-median image are summed, and windows are selected from the
/// summed map. Deviation from the consensus in any member makes a region
/// eligible, so the ROIs serve every image in the set.
pub fn shared_rois(images: &[ImageRgb], max_rois: usize) -> Result<Vec<Rect>, CliError> {
    let median = median_image(images);
    let mut summed = vec![0.0f32; median.width() * median.height()];
    for img in images {
        let map = error_map(img, &median)?;
        for (acc, v) in summed.iter_mut().zip(map.values()) {
            *acc += v;
        }
    }
    let map = ErrorMap::from_values(median.width(), median.height(), summed)?;
    Ok(select_rois_from_map(&map, max_rois)?)
}

/// Mean model score of one image over the given ROIs.
pub fn mean_roi_score(
    model: &ScorerModel,
    img: &ImageRgb,
    rois: &[Rect],
) -> Result<f64, CliError> {
    let mut sum = 0.0;
    for &roi in rois {
        sum += model.forward(&Patch::from_image(img, roi)?);
    }
    Ok(sum / rois.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_image(size: usize, seed: u64) -> ImageRgb {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..size * size * 3).map(|_| rng.gen::<f32>()).collect();
        ImageRgb::from_data(size, size, data).unwrap()
    }

    #[test]
    fn median_image_is_the_majority_pixel() {
        let mut a = ImageRgb::new(2, 2);
        let mut b = ImageRgb::new(2, 2);
        let mut c = ImageRgb::new(2, 2);
        for (img, v) in [(&mut a, 0.1), (&mut b, 0.5), (&mut c, 0.9)] {
            for y in 0..2 {
                for x in 0..2 {
                    for ch in 0..3 {
                        img.set(x, y, ch, v);
                    }
                }
            }
        }
        let med = median_image(&[a.clone(), b, c]);
        assert!(med.data().iter().all(|&v| v == 0.5));
        // Even count: mean of the middle two.
        let mut d = ImageRgb::new(2, 2);
        for y in 0..2 {
            for x in 0..2 {
                for ch in 0..3 {
                    d.set(x, y, ch, 0.3);
                }
            }
        }
        let med = median_image(&[a, d]);
        assert!(med.data().iter().all(|&v| (v - 0.2).abs() < 1e-7));
    }

    #[test]
    fn shared_rois_land_on_the_deviating_region() {
        // Three near-identical noisy images; one deviates in a block.
        let base = noise_image(96, 3);
        let mut odd = base.clone();
        for y in 48..80 {
            for x in 48..80 {
                for c in 0..3 {
                    odd.set(x, y, c, 1.0 - odd.get(x, y, c));
                }
            }
        }
        let rois = shared_rois(&[base.clone(), base.clone(), odd], 4).unwrap();
        assert!(!rois.is_empty());
        for r in &rois {
            assert!(r.x + r.w > 40 && r.x < 88, "roi {r:?} off target");
            assert!(r.y + r.h > 40 && r.y < 88, "roi {r:?} off target");
        }
        // Identical images: nothing qualifies.
        assert!(shared_rois(&[base.clone(), base], 4).is_err());
    }

    #[test]
    fn mean_roi_score_averages_forward_passes() {
        let img = noise_image(64, 5);
        let rois = [Rect::new(0, 0, 32, 32), Rect::new(32, 32, 32, 32)];
        let model = ScorerModel::init("small-v1", 1).unwrap();
        let a = model.forward(&Patch::from_image(&img, rois[0]).unwrap());
        let b = model.forward(&Patch::from_image(&img, rois[1]).unwrap());
        let mean = mean_roi_score(&model, &img, &rois).unwrap();
        assert!((mean - (a + b) / 2.0).abs() < 1e-12);
    }
}
