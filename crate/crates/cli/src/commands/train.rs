//! `train`: fit the patch scorer on a corpus manifest.

use std::fs;
use std::path::Path;

use rankdist_core::dataset::CorpusManifest;
use rankdist_core::model::{save_checkpoint, train, ScorerModel};
use rankdist_core::seeding;

use crate::config::TrainSettings;
use crate::{report, CliError};

pub fn run(settings: &TrainSettings) -> Result<(), CliError> {
    let cfg = &settings.config;
    println!("seed: {}", cfg.seed);
    let manifest = CorpusManifest::read(&settings.manifest)?;
    let base_dir = settings.manifest.parent().unwrap_or(Path::new("."));

    // Weight init gets its own seed stream so it stays decoupled from the
    // trainer's batch shuffling.
    let init = ScorerModel::init("small-v1", seeding::derive_seed_str(cfg.seed, "init"))?;
    let (trained, history) = train(&init, &manifest, base_dir, cfg)?;

    fs::create_dir_all(&settings.out_dir)?;
    let ckpt = settings.out_dir.join("model.ckpt");
    save_checkpoint(&trained, &ckpt)?;
    report::write_history_csv(&settings.out_dir.join("history.csv"), &history)?;

    match history.last() {
        Some(last) => {
            let best = history
                .iter()
                .map(|r| r.val_tp_rate)
                .fold(f64::NEG_INFINITY, f64::max);
            println!("evaluations: {}", history.len());
            println!("final val TP: {:.2}%", last.val_tp_rate);
            println!("best val TP: {:.2}%", best);
        }
        None => println!("no evaluations (0 epochs)"),
    }
    println!("checkpoint: {}", ckpt.display());
    Ok(())
}
