//! Black-box tests of the `rankdist` binary: exit codes, artifacts, and
//! stdout contracts for every subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rankdist_core::distortion::{self, DistortionSpec, LcaDirection};
use rankdist_core::imaging::{save_image, SaveFormat};
use rankdist_core::model::{save_checkpoint, ScorerModel};
use rankdist_core::seeding;

fn rankdist_env(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rankdist"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary should spawn")
}

fn rankdist(args: &[&str]) -> Output {
    rankdist_env(args, &[])
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal expected")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Builds a small LCA corpus from synthetic charts, returning the manifest
/// path.
fn gen_toy_corpus(dir: &Path, seed: u64) -> PathBuf {
    let out = dir.join("corpus");
    let run = rankdist(&[
        "gen-dataset",
        "--kind",
        "lca",
        "--sources",
        "synthetic",
        "--count",
        "12",
        "--size",
        "96",
        "--pairs-per-source",
        "2",
        "--max-rois",
        "2",
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "gen-dataset failed: {}", stderr(&run));
    out.join("manifest.jsonl")
}

/// A synthetic chart distorted at the given LCA levels, saved as
/// `<stem>_level<k>.png` files. Returns the written paths.
fn leveled_images(dir: &Path, stem: &str, levels: &[f64]) -> Vec<PathBuf> {
    let charts = {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(424242);
        let spec = distortion::sample_pattern_spec(96, &mut rng);
        distortion::generate_pattern(&spec).unwrap()
    };
    levels
        .iter()
        .map(|&level| {
            let spec = DistortionSpec::Lca {
                shift: level,
                direction: LcaDirection::MainDiagonal,
            };
            let img = distortion::apply(&spec, &charts).unwrap();
            let path = dir.join(format!("{stem}_level{level}.png"));
            save_image(&img, &path, SaveFormat::Png).unwrap();
            path
        })
        .collect()
}

/// Recursively collects (relative path, bytes) pairs, sorted by path.
fn dir_contents(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn gen_dataset_is_deterministic_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let run_one = |name: &str, envs: &[(&str, &str)]| {
        let out = tmp.path().join(name);
        let run = rankdist_env(
            &[
                "gen-dataset",
                "--kind",
                "lca",
                "--sources",
                "synthetic",
                "--count",
                "6",
                "--size",
                "96",
                "--pairs-per-source",
                "2",
                "--max-rois",
                "2",
                "--seed",
                "3",
                "--out",
                out.to_str().unwrap(),
            ],
            envs,
        );
        assert_eq!(code(&run), 0, "{}", stderr(&run));
        (stdout(&run), dir_contents(&out))
    };
    let (out_a, files_a) = run_one("a", &[]);
    let (out_b, files_b) = run_one("b", &[]);
    let (out_c, files_c) = run_one("c", &[("RANKDIST_THREADS", "1")]);
    // Identical stdout except for the differing --out path on the last line.
    let strip_last = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("manifest:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip_last(&out_a), strip_last(&out_b));
    assert_eq!(strip_last(&out_a), strip_last(&out_c));
    assert_eq!(files_a, files_b);
    assert_eq!(files_a, files_c);
    assert!(files_a.iter().any(|(p, _)| p == "manifest.jsonl"));
    assert!(files_a.iter().any(|(p, _)| p.starts_with("patches/")));
}

#[test]
fn gen_dataset_missing_out_is_a_usage_error() {
    let run = rankdist(&["gen-dataset", "--kind", "moire", "--sources", "synthetic"]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("--out"), "{}", stderr(&run));
}

#[test]
fn gen_dataset_empty_source_dir_fails_without_leaving_output() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("empty");
    fs::create_dir(&src).unwrap();
    let out = tmp.path().join("corpus");
    let run = rankdist(&[
        "gen-dataset",
        "--kind",
        "lca",
        "--sources",
        src.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("no source images"), "{}", stderr(&run));
    assert!(!out.exists());
}

#[test]
fn gen_dataset_rejects_undersized_moire_charts() {
    let tmp = tempfile::tempdir().unwrap();
    let run = rankdist(&[
        "gen-dataset",
        "--kind",
        "moire",
        "--sources",
        "synthetic",
        "--size",
        "96",
        "--out",
        tmp.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("too small"), "{}", stderr(&run));
}

#[test]
fn train_writes_checkpoint_and_history() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = gen_toy_corpus(tmp.path(), 1);
    let out_dir = tmp.path().join("run");
    let run = rankdist(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--epochs",
        "2",
        "--batch-size",
        "16",
        "--eval-every",
        "4",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(out_dir.join("model.ckpt").exists());
    let history = fs::read_to_string(out_dir.join("history.csv")).unwrap();
    assert!(history.lines().count() >= 2, "history: {history}");
    assert!(history.starts_with("batch,train_loss,val_tp_rate"));
    let text = stdout(&run);
    assert!(text.contains("final val TP:"), "{text}");
    assert!(text.contains("best val TP:"), "{text}");
}

#[test]
fn train_reports_the_corrupt_manifest_line() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = gen_toy_corpus(tmp.path(), 2);
    let mut text = fs::read_to_string(&manifest).unwrap();
    let bad_line = text.lines().count() + 1;
    text.push_str("{not json\n");
    fs::write(&manifest, text).unwrap();
    let run = rankdist(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 1);
    let err = stderr(&run);
    assert!(err.contains(&format!("line {bad_line}")), "{err}");
}

#[test]
fn zero_epochs_checkpoint_equals_initialization() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = gen_toy_corpus(tmp.path(), 4);
    let out_dir = tmp.path().join("run");
    let run = rankdist(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--epochs",
        "0",
        "--seed",
        "11",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(stdout(&run).contains("no evaluations"), "{}", stdout(&run));

    // The command seeds weight init with a stream derived from --seed.
    let expected = ScorerModel::init("small-v1", seeding::derive_seed_str(11, "init")).unwrap();
    let expected_path = tmp.path().join("expected.ckpt");
    save_checkpoint(&expected, &expected_path).unwrap();
    assert_eq!(
        fs::read(out_dir.join("model.ckpt")).unwrap(),
        fs::read(&expected_path).unwrap()
    );
}

#[test]
fn eval_pairs_manifest_mode_reports_the_test_split_tp() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest_path = gen_toy_corpus(tmp.path(), 1);
    let out_dir = tmp.path().join("run");
    let train = rankdist(&[
        "train",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--epochs",
        "0",
    ]);
    assert_eq!(code(&train), 0, "{}", stderr(&train));

    let report_dir = tmp.path().join("report");
    let run = rankdist(&[
        "eval-pairs",
        "--checkpoint",
        out_dir.join("model.ckpt").to_str().unwrap(),
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out-dir",
        report_dir.to_str().unwrap(),
        "--svg",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));

    // Recompute the expected figure through the library.
    let manifest = rankdist_core::dataset::CorpusManifest::read(&manifest_path).unwrap();
    let pairs = manifest
        .load_pairs(manifest_path.parent().unwrap(), rankdist_core::dataset::Split::Test)
        .unwrap();
    let model = rankdist_core::model::load_checkpoint(&out_dir.join("model.ckpt")).unwrap();
    let tp = rankdist_core::ranking::tp_rate(&model, &pairs).unwrap();
    let text = stdout(&run);
    assert!(text.contains(&format!("TP: {tp:.2}%")), "{text}\nexpected {tp:.2}");

    let csv = fs::read_to_string(report_dir.join("eval_pairs.csv")).unwrap();
    assert_eq!(csv.lines().count(), pairs.len() + 1);
    assert!(csv.starts_with("pair,source_id,level_a,level_b,score_a,score_b,predicted,correct"));
    assert!(fs::read_to_string(report_dir.join("eval_pairs.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn eval_pairs_needs_at_least_two_distinct_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("imgs");
    fs::create_dir(&images).unwrap();
    leveled_images(&images, "chart", &[2.0]);
    let ckpt = tmp.path().join("m.ckpt");
    save_checkpoint(&ScorerModel::init("small-v1", 0).unwrap(), &ckpt).unwrap();
    let run = rankdist(&[
        "eval-pairs",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--images",
        images.to_str().unwrap(),
        "--crop",
        "64",
        "--out-dir",
        tmp.path().join("report").to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("levels"), "{}", stderr(&run));
}

#[test]
fn eval_pairs_image_mode_writes_one_row_per_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("imgs");
    fs::create_dir(&images).unwrap();
    leveled_images(&images, "chart", &[1.0, 2.5, 4.0]);
    let ckpt = tmp.path().join("m.ckpt");
    save_checkpoint(&ScorerModel::init("small-v1", 0).unwrap(), &ckpt).unwrap();
    let report_dir = tmp.path().join("report");
    let run = rankdist(&[
        "eval-pairs",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--images",
        images.to_str().unwrap(),
        "--trials",
        "5",
        "--crop",
        "64",
        "--seed",
        "2",
        "--out-dir",
        report_dir.to_str().unwrap(),
        "--svg",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let text = stdout(&run);
    assert!(text.contains("images: 3"), "{text}");
    assert!(text.contains("trials: 5"), "{text}");
    assert!(text.contains("TP: "), "{text}");
    let csv = fs::read_to_string(report_dir.join("eval_pairs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("trial,outcome,decision,correct,n_rois"));
    assert!(report_dir.join("eval_pairs.svg").exists());

    // Bad level suffix fails up front.
    fs::copy(
        images.join("chart_level1.png"),
        images.join("broken.png"),
    )
    .unwrap();
    let run = rankdist(&[
        "eval-pairs",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--images",
        images.to_str().unwrap(),
        "--out-dir",
        report_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("broken.png"), "{}", stderr(&run));
}

#[test]
fn rank_set_reports_a_tie_for_identical_images() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = leveled_images(tmp.path(), "chart", &[2.0]);
    let copy = tmp.path().join("copy.png");
    fs::copy(&paths[0], &copy).unwrap();
    let ckpt = tmp.path().join("m.ckpt");
    save_checkpoint(&ScorerModel::init("small-v1", 0).unwrap(), &ckpt).unwrap();
    let report_dir = tmp.path().join("report");
    let run = rankdist(&[
        "rank-set",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--images",
        paths[0].to_str().unwrap(),
        copy.to_str().unwrap(),
        "--out-dir",
        report_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(stdout(&run).contains("tie"), "{}", stdout(&run));
    let csv = fs::read_to_string(report_dir.join("rank_set.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",1.5"), "{line}");
    }
}

#[test]
fn rank_set_rejects_mismatched_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let big = leveled_images(tmp.path(), "big", &[2.0]).remove(0);
    let small_img = rankdist_core::imaging::ImageRgb::new(64, 64);
    let small = tmp.path().join("small.png");
    save_image(&small_img, &small, SaveFormat::Png).unwrap();
    let ckpt = tmp.path().join("m.ckpt");
    save_checkpoint(&ScorerModel::init("small-v1", 0).unwrap(), &ckpt).unwrap();
    let run = rankdist(&[
        "rank-set",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--images",
        big.to_str().unwrap(),
        small.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("report").to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 1);
    assert!(stderr(&run).contains("dimensions"), "{}", stderr(&run));
}

#[test]
fn rank_set_orders_images_and_plots_against_expected() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = leveled_images(tmp.path(), "chart", &[1.0, 3.0, 5.0]);
    let ckpt = tmp.path().join("m.ckpt");
    save_checkpoint(&ScorerModel::init("small-v1", 0).unwrap(), &ckpt).unwrap();
    let report_dir = tmp.path().join("report");
    let run = rankdist(&[
        "rank-set",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--images",
        paths[0].to_str().unwrap(),
        paths[1].to_str().unwrap(),
        paths[2].to_str().unwrap(),
        "--expected",
        "1,2,3",
        "--svg",
        "--out-dir",
        report_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let text = stdout(&run);
    assert!(text.contains("ranking (least to most distorted):"), "{text}");
    assert!(text.contains("spearman vs expected:"), "{text}");
    let csv = fs::read_to_string(report_dir.join("rank_set.csv")).unwrap();
    assert!(csv.starts_with("image,predicted_rank,expected_rank"));
    assert_eq!(csv.lines().count(), 4);
    assert!(fs::read_to_string(report_dir.join("rank_set.svg"))
        .unwrap()
        .contains("stroke-dasharray"));
}

#[test]
fn config_file_supplies_values_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let out_cfg = tmp.path().join("from-config");
    let config = tmp.path().join("run.json");
    fs::write(
        &config,
        format!(
            r#"{{"gen_dataset": {{"kind": "lca", "sources": "synthetic", "count": 3,
                 "size": 96, "pairs_per_source": 1, "max_rois": 1,
                 "out": {:?}}}}}"#,
            out_cfg.to_str().unwrap()
        ),
    )
    .unwrap();
    // Config alone supplies everything.
    let run = rankdist(&["gen-dataset", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(stdout(&run).contains("sources: 3"));
    assert!(out_cfg.join("manifest.jsonl").exists());
    // A flag overrides the config's count.
    let out_flag = tmp.path().join("from-flag");
    let run = rankdist(&[
        "gen-dataset",
        "--config",
        config.to_str().unwrap(),
        "--count",
        "2",
        "--out",
        out_flag.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(stdout(&run).contains("sources: 2"));

    // Unknown keys in the config are usage errors.
    fs::write(&config, r#"{"trian": {}}"#).unwrap();
    let run = rankdist(&["gen-dataset", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&run), 2);
}

#[test]
fn bad_thread_env_and_unknown_flags_are_usage_errors() {
    let run = rankdist_env(
        &["gen-dataset", "--kind", "lca", "--sources", "synthetic", "--out", "x"],
        &[("RANKDIST_THREADS", "abc")],
    );
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("RANKDIST_THREADS"), "{}", stderr(&run));

    let run = rankdist(&["gen-dataset", "--no-such-flag"]);
    assert_eq!(code(&run), 2);
}
