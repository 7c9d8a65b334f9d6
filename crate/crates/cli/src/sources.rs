//! Source-image acquisition: directory loading, synthetic chart drawing,
//! and the `<name>_level<k>` filename convention for labeled images.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rankdist_core::dataset::CorpusSource;
use rankdist_core::distortion::{generate_pattern, sample_pattern_spec};
use rankdist_core::imaging::{load_image, ImageRgb};
use rankdist_core::seeding;

use crate::CliError;

/// All PNG files in `dir`, sorted by file name for a stable order.
fn png_paths(dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    Ok(paths)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads a directory of PNGs as corpus sources (id = file stem).
pub fn load_source_dir(dir: &Path) -> Result<Vec<CorpusSource>, CliError> {
    let paths = png_paths(dir)?;
    if paths.is_empty() {
        return Err(CliError::Msg(format!(
            "no source images (PNG) in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            Ok(CorpusSource {
                id: stem(p),
                image: load_image(p)?,
            })
        })
        .collect()
}

/// Draws `count` random synthetic test charts of the given side length.
/// Chart `i` depends only on `(seed, i)`, not on `count`.
pub fn synthetic_charts(count: usize, size: usize, seed: u64) -> Result<Vec<CorpusSource>, CliError> {
    (0..count)
        .map(|i| {
            let chart_seed = seeding::derive_seed_str(seed, &format!("chart:{i}"));
            let mut rng = ChaCha8Rng::seed_from_u64(chart_seed);
            let spec = sample_pattern_spec(size, &mut rng);
            Ok(CorpusSource {
                id: format!("chart-{i:05}"),
                image: generate_pattern(&spec)?,
            })
        })
        .collect()
}

/// Extracts the distortion level a file name encodes as `<name>_level<k>`,
/// where `k` parses as a finite number ("shot_level2.png" → 2.0).
pub fn parse_level(file_name: &str) -> Option<f64> {
    let stem = file_name.rsplit_once('.').map_or(file_name, |(s, _)| s);
    let (_, tail) = stem.rsplit_once("_level")?;
    tail.parse::<f64>().ok().filter(|l| l.is_finite())
}

/// Loads a directory of level-labeled images: `(name, image, level)` sorted
/// by file name.
pub fn load_leveled_dir(dir: &Path) -> Result<Vec<(String, ImageRgb, f64)>, CliError> {
    let paths = png_paths(dir)?;
    if paths.is_empty() {
        return Err(CliError::Msg(format!(
            "no source images (PNG) in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let level = parse_level(&name).ok_or_else(|| {
                CliError::Msg(format!(
                    "cannot parse a distortion level from `{name}`: expected `<name>_level<k>.png`"
                ))
            })?;
            Ok((name, load_image(p)?, level))
        })
        .collect()
}
