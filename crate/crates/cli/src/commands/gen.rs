//! `gen-dataset`: build an ordered patch-pair corpus.

use std::fs;
use std::path::Path;

use rankdist_core::dataset::{build_corpus, CorpusSource, MOIRE_LEVEL_RANGE};
use rankdist_core::distortion::DistortionKind;
use rankdist_core::imaging::PATCH_SIZE;

use crate::config::{GenSettings, SourceSpec};
use crate::{sources, usage, CliError};

/// Smallest source side that works for every level the corpus may draw:
/// moire downscales by up to the top of the level range and the downscaled
/// image must still hold a patch; LCA leaves dimensions alone.
fn min_source_side(kind: DistortionKind) -> usize {
    match kind {
        DistortionKind::Moire => (MOIRE_LEVEL_RANGE.end * PATCH_SIZE as f64).ceil() as usize,
        DistortionKind::Lca => PATCH_SIZE,
    }
}

fn check_source_sizes(srcs: &[CorpusSource], kind: DistortionKind) -> Result<(), CliError> {
    let min = min_source_side(kind);
    match srcs
        .iter()
        .find(|s| s.image.width() < min || s.image.height() < min)
    {
        Some(s) => Err(CliError::Msg(format!(
            "source `{}` is {}x{}, but {kind:?} needs at least {min}x{min}",
            s.id,
            s.image.width(),
            s.image.height()
        ))),
        None => Ok(()),
    }
}

pub fn run(settings: &GenSettings) -> Result<(), CliError> {
    println!("seed: {}", settings.seed);
    if settings.sources == SourceSpec::Synthetic && settings.size < min_source_side(settings.kind)
    {
        return Err(usage(format!(
            "--size {} is too small: {:?} charts need at least {} px",
            settings.size,
            settings.kind,
            min_source_side(settings.kind)
        )));
    }
    let srcs = match &settings.sources {
        SourceSpec::Synthetic => {
            sources::synthetic_charts(settings.count, settings.size, settings.seed)?
        }
        SourceSpec::Dir(dir) => sources::load_source_dir(dir)?,
    };
    check_source_sizes(&srcs, settings.kind)?;
    println!("sources: {}", srcs.len());

    let existed_before = settings.out.exists();
    let manifest = build_corpus(
        &srcs,
        settings.kind,
        settings.pairs_per_source,
        settings.max_rois,
        settings.seed,
        &settings.out,
    )
    .inspect_err(|_| cleanup_partial(&settings.out, existed_before))?;

    let c = manifest.header.counts;
    println!(
        "pairs: {} (train {} / val {} / test {}), skipped {}",
        c.total, c.train, c.val, c.test, c.skipped_pairs
    );
    println!("manifest: {}", settings.out.join("manifest.jsonl").display());
    Ok(())
}

/// Removes whatever a failed build left behind: the whole output directory
/// if this run created it, otherwise just the corpus artifacts inside it.
fn cleanup_partial(out: &Path, existed_before: bool) {
    if existed_before {
        let _ = fs::remove_file(out.join("manifest.jsonl"));
        let _ = fs::remove_dir_all(out.join("patches"));
    } else {
        let _ = fs::remove_dir_all(out);
    }
}
