//! Corpus building: from source images to persisted patch pairs.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{
    extract_rois, make_ordered_images, CorpusManifest, DatasetError, ManifestEntry,
    ManifestHeader, Split, SplitCounts,
};
use crate::distortion::DistortionKind;
use crate::imaging::{save_image, Patch, SaveFormat};
use crate::imaging::ImageRgb;
use crate::seeding;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One base image for corpus generation, with a stable identifier.
///
/// The id names patch files, keys the train/val/test split, and seeds the
/// source's private RNG stream, so it must be unique within a corpus.
#[derive(Debug, Clone)]
pub struct CorpusSource {
    pub id: String,
    pub image: ImageRgb,
}

/// Builds an ordered-pair corpus under `out_dir`.
///
/// Per source: `pairs_per_source` level pairs are drawn and simulated, each
/// pair contributes up to `max_rois` registered patch pairs at its strongest
/// error-map windows, and the patches are written as PNGs under
/// `out_dir/patches/`. A manifest indexing everything is written to
/// `out_dir/manifest.jsonl` and returned.
///
/// The output is a pure function of `(sources, kind, counts, seed)`: every
/// source works from its own derived RNG stream and entries are sorted
/// before writing, so reruns — with any thread count — produce identical
/// bytes. Pairs whose views differ nowhere (no qualifying ROI) are skipped
/// and counted in the header.
pub fn build_corpus(
    sources: &[CorpusSource],
    kind: DistortionKind,
    pairs_per_source: usize,
    max_rois: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<CorpusManifest, DatasetError> {
    if sources.is_empty() {
        return Err(DatasetError::EmptySources);
    }
    if pairs_per_source == 0 || max_rois == 0 {
        return Err(DatasetError::InvalidInput(
            "pairs_per_source and max_rois must be >= 1".into(),
        ));
    }
    let mut ids: Vec<&str> = sources.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(dup) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(DatasetError::DuplicateSourceId(dup[0].to_string()));
    }
    let patches_dir = out_dir.join("patches");
    fs::create_dir_all(&patches_dir)?;

    let mut per_source: Vec<(String, Vec<ManifestEntry>, usize)> = sources
        .par_iter()
        .map(|source| process_source(source, kind, pairs_per_source, max_rois, seed, &patches_dir))
        .collect::<Result<_, _>>()?;
    per_source.sort_by(|(a, _, _), (b, _, _)| a.cmp(b));

    let mut counts = SplitCounts::default();
    let mut entries = Vec::new();
    for (_, source_entries, skipped) in per_source {
        counts.skipped_pairs += skipped;
        for entry in source_entries {
            counts.total += 1;
            match entry.split {
                Split::Train => counts.train += 1,
                Split::Val => counts.val += 1,
                Split::Test => counts.test += 1,
            }
            entries.push(entry);
        }
    }
    let manifest = CorpusManifest {
        header: ManifestHeader {
            version: 1,
            seed,
            kind,
            counts,
        },
        entries,
    };
    manifest.write(&out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}

/// Generates all pairs for one source; returns its entries (in roi order)
/// and how many pairs were skipped for lack of qualifying ROIs.
fn process_source(
    source: &CorpusSource,
    kind: DistortionKind,
    pairs_per_source: usize,
    max_rois: usize,
    seed: u64,
    patches_dir: &Path,
) -> Result<(String, Vec<ManifestEntry>, usize), DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive_seed_str(
        seed,
        &format!("source:{}", source.id),
    ));
    let split = Split::for_source_id(&source.id);
    let mut entries = Vec::new();
    let mut skipped = 0usize;
    let mut roi_idx = 0usize;
    for _ in 0..pairs_per_source {
        let (img_a, img_b, spec_a, spec_b) = make_ordered_images(&source.image, kind, &mut rng)?;
        let rects = match extract_rois(&img_a, &img_b, max_rois) {
            Ok(rects) => rects,
            Err(DatasetError::NoQualifyingRoi) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for rect in rects {
            let name_a = format!("{}_{roi_idx}_a.png", source.id);
            let name_b = format!("{}_{roi_idx}_b.png", source.id);
            let patch_a = Patch::from_image(&img_a, rect)?;
            let patch_b = Patch::from_image(&img_b, rect)?;
            save_image(&patch_a.to_image(), &patches_dir.join(&name_a), SaveFormat::Png)?;
            save_image(&patch_b.to_image(), &patches_dir.join(&name_b), SaveFormat::Png)?;
            entries.push(ManifestEntry {
                source_id: source.id.clone(),
                kind,
                level_a: spec_a.level(),
                level_b: spec_b.level(),
                direction: spec_a.direction(),
                rect: [rect.x, rect.y, rect.w, rect.h],
                patch_a_path: format!("patches/{name_a}"),
                patch_b_path: format!("patches/{name_b}"),
                split,
            });
            roi_idx += 1;
        }
    }
    Ok((source.id.clone(), entries, skipped))
}

#[cfg(test)]
mod tests {
    use super::super::tests::noise_image;
    use super::*;
    use crate::imaging::error_map;

    fn noise_sources(n: usize, size: usize) -> Vec<CorpusSource> {
        (0..n)
            .map(|i| CorpusSource {
                id: format!("src_{i:03}"),
                image: noise_image(size, size, 7000 + i as u64),
            })
            .collect()
    }

    #[test]
    fn empty_and_duplicate_sources_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_corpus(&[], DistortionKind::Lca, 1, 1, 0, dir.path()),
            Err(DatasetError::EmptySources)
        ));
        let mut sources = noise_sources(2, 64);
        sources[1].id = sources[0].id.clone();
        assert!(matches!(
            build_corpus(&sources, DistortionKind::Lca, 1, 1, 0, dir.path()),
            Err(DatasetError::DuplicateSourceId(_))
        ));
    }

    #[test]
    fn built_corpus_is_internally_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let sources = noise_sources(4, 96);
        let manifest =
            build_corpus(&sources, DistortionKind::Lca, 2, 3, 11, dir.path()).unwrap();

        assert!(manifest.header.counts.total > 0);
        assert_eq!(manifest.header.counts.total, manifest.entries.len());
        assert_eq!(
            manifest.header.counts.train + manifest.header.counts.val + manifest.header.counts.test,
            manifest.header.counts.total
        );
        // Entries are sorted by source id, with roi indices ascending within.
        let keys: Vec<_> = manifest
            .entries
            .iter()
            .map(|e| (e.source_id.clone(), e.patch_a_path.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);

        for entry in &manifest.entries {
            assert!(entry.level_a < entry.level_b);
            assert_eq!(entry.split, Split::for_source_id(&entry.source_id));
            // Patch pairs must decode and actually differ.
            let a = crate::imaging::load_image(&dir.path().join(&entry.patch_a_path)).unwrap();
            let b = crate::imaging::load_image(&dir.path().join(&entry.patch_b_path)).unwrap();
            assert_eq!((a.width(), a.height()), (32, 32));
            let map = error_map(&a, &b).unwrap();
            assert!(map.values().iter().any(|&v| v > 0.0), "{}", entry.patch_a_path);
        }
    }

    #[test]
    fn rerun_reproduces_identical_bytes() {
        let sources = noise_sources(3, 80);
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            build_corpus(&sources, DistortionKind::Lca, 2, 2, 5, d.path()).unwrap();
        }
        let list = |root: &Path| -> Vec<(String, Vec<u8>)> {
            let mut files: Vec<(String, Vec<u8>)> = walk(root)
                .into_iter()
                .map(|p| {
                    let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                    (rel, fs::read(&p).unwrap())
                })
                .collect();
            files.sort();
            files
        };
        fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
            let mut out = Vec::new();
            for e in fs::read_dir(dir).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    out.extend(walk(&p));
                } else {
                    out.push(p);
                }
            }
            out
        }
        assert_eq!(list(dirs[0].path()), list(dirs[1].path()));
    }

    #[test]
    fn featureless_sources_are_skipped_and_counted() {
        // A constant image has no edges, so LCA shifts are invisible and
        // every pair is skipped.
        let dir = tempfile::tempdir().unwrap();
        let flat = CorpusSource {
            id: "flat".into(),
            image: {
                let mut img = ImageRgb::new(64, 64);
                for y in 0..64 {
                    for x in 0..64 {
                        for c in 0..3 {
                            img.set(x, y, c, 0.5);
                        }
                    }
                }
                img
            },
        };
        let noisy = CorpusSource {
            id: "noisy".into(),
            image: noise_image(64, 64, 1),
        };
        let manifest =
            build_corpus(&[flat, noisy], DistortionKind::Lca, 3, 2, 2, dir.path()).unwrap();
        assert_eq!(manifest.header.counts.skipped_pairs, 3);
        assert!(manifest.entries.iter().all(|e| e.source_id == "noisy"));
    }

    #[test]
    fn load_pairs_roundtrips_the_split() {
        let dir = tempfile::tempdir().unwrap();
        let sources = noise_sources(6, 64);
        let manifest =
            build_corpus(&sources, DistortionKind::Lca, 1, 2, 9, dir.path()).unwrap();
        for split in [Split::Train, Split::Val, Split::Test] {
            let pairs = manifest.load_pairs(dir.path(), split).unwrap();
            assert_eq!(pairs.len(), manifest.entries_for(split).count());
            for pair in &pairs {
                assert!(pair.spec_a().level() < pair.spec_b().level());
            }
        }
    }
}
