//! `rank-set`: order registered images by predicted distortion level.

use std::fs;

use rankdist_core::imaging::{average_ranks, load_image, spearman, ImageError, ImageRgb, RankVector};
use rankdist_core::model::load_checkpoint;
use rankdist_core::ranking::{rank_image_set, score_images};

use crate::config::RankSettings;
use crate::report::{write_csv, write_scatter, Scatter};
use crate::{commands, CliError};

pub fn run(settings: &RankSettings) -> Result<(), CliError> {
    let model = load_checkpoint(&settings.checkpoint)?;
    let images: Vec<ImageRgb> = settings
        .images
        .iter()
        .map(|p| load_image(p))
        .collect::<Result<_, _>>()?;
    let ids = image_ids(settings);
    println!("images: {}", images.len());

    let (w, h) = (images[0].width(), images[0].height());
    if let Some(i) = (1..images.len()).find(|&i| (images[i].width(), images[i].height()) != (w, h))
    {
        return Err(CliError::Msg(format!(
            "images must share dimensions: {} is {}x{}, {} is {w}x{h}",
            ids[i],
            images[i].width(),
            images[i].height(),
            ids[0],
        )));
    }

    // Identical inputs carry no ordering signal; that is a tie, not an
    // error.
    if images[1..].iter().all(|img| img.data() == images[0].data()) {
        let tie = (images.len() + 1) as f64 / 2.0;
        println!("all images are identical: tie");
        let ranks = RankVector::new(vec![tie; images.len()]).expect("constant ranks are valid");
        report_ranking(settings, &ids, &ranks)?;
        return Ok(());
    }

    let rois = commands::shared_rois(&images, settings.max_rois)?;
    println!("rois: {}", rois.len());
    let matrix = score_images(&model, &images, &ids, &rois)?;
    let (image_ranks, _) = rank_image_set(&matrix)?;
    report_ranking(settings, &ids, &image_ranks)?;
    Ok(())
}

/// Display ids: file names, or full paths when names collide.
fn image_ids(settings: &RankSettings) -> Vec<String> {
    let names: Vec<String> = settings
        .images
        .iter()
        .map(|p| {
            p.file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        })
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        settings
            .images
            .iter()
            .map(|p| p.display().to_string())
            .collect()
    } else {
        names
    }
}

/// Prints the ranking, writes the CSV, and (with expected ranks) reports
/// Spearman correlation and optionally the scatter plot.
fn report_ranking(
    settings: &RankSettings,
    ids: &[String],
    predicted: &RankVector,
) -> Result<(), CliError> {
    let ranks = predicted.ranks();
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ranks[a].total_cmp(&ranks[b]).then(a.cmp(&b)));
    println!("ranking (least to most distorted):");
    for (place, &i) in order.iter().enumerate() {
        println!("  {}. {} (rank {:.2})", place + 1, ids[i], ranks[i]);
    }

    let expected = match &settings.expected {
        Some(levels) => Some(average_ranks(levels)?),
        None => None,
    };
    if let Some(expected) = &expected {
        match spearman(predicted, expected) {
            Ok(rho) => println!("spearman vs expected: {rho:.4}"),
            Err(ImageError::DegenerateInput) => {
                println!("spearman vs expected: undefined (constant ranks)")
            }
            Err(e) => return Err(e.into()),
        }
    }

    fs::create_dir_all(&settings.out_dir)?;
    let mut header = vec!["image", "predicted_rank"];
    if expected.is_some() {
        header.push("expected_rank");
    }
    let rows = (0..ids.len()).map(|i| {
        let mut row = vec![ids[i].clone(), ranks[i].to_string()];
        if let Some(expected) = &expected {
            row.push(expected.ranks()[i].to_string());
        }
        row
    });
    write_csv(&settings.out_dir.join("rank_set.csv"), &header, rows)?;

    if settings.svg {
        let expected = expected
            .as_ref()
            .expect("--svg without --expected is rejected at argument resolution");
        let points: Vec<(f64, f64)> = expected
            .ranks()
            .iter()
            .zip(ranks)
            .map(|(&e, &p)| (e, p))
            .collect();
        write_scatter(
            &settings.out_dir.join("rank_set.svg"),
            &Scatter {
                x_label: "expected rank",
                y_label: "predicted rank",
                points: &points,
                diagonal: true,
            },
        )?;
    }
    Ok(())
}
