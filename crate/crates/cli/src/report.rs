//! Report artifacts: CSV tables and a small hand-rolled SVG scatter plot.

use std::path::Path;

use rankdist_core::model::EvalRecord;

use crate::CliError;

/// Writes a CSV with a header row; fields are quoted per RFC 4180 as
/// needed. Numbers should be pre-formatted by the caller.
pub fn write_csv<R>(path: &Path, header: &[&str], rows: R) -> Result<(), CliError>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Training history: one row per validation evaluation.
pub fn write_history_csv(path: &Path, history: &[EvalRecord]) -> Result<(), CliError> {
    write_csv(
        path,
        &["batch", "train_loss", "val_tp_rate"],
        history.iter().map(|r| {
            vec![
                r.batch.to_string(),
                r.train_loss.to_string(),
                r.val_tp_rate.to_string(),
            ]
        }),
    )
}

/// A scatter plot specification.
pub struct Scatter<'a> {
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: &'a [(f64, f64)],
    /// Draw the y = x reference line.
    pub diagonal: bool,
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;
const TICKS: usize = 5;

/// One axis range padded by 5% of its span (or ±1 when degenerate).
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
    (lo - pad, hi + pad)
}

/// Renders the plot as a standalone SVG document.
pub fn render_scatter(plot: &Scatter) -> String {
    let (x0, x1) = padded_range(plot.points.iter().map(|p| p.0));
    let (y0, y1) = padded_range(plot.points.iter().map(|p| p.1));
    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_T + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
    ));
    // Axes.
    let (left, bottom, right, top) = (MARGIN_L, MARGIN_T + plot_h, MARGIN_L + plot_w, MARGIN_T);
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{bottom}\" stroke=\"black\"/>\n\
         <line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"black\"/>\n"
    ));
    // Ticks and numeric labels.
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (tx, ty) = (px(xv), py(yv));
        svg.push_str(&format!(
            "<line x1=\"{tx:.2}\" y1=\"{bottom}\" x2=\"{tx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
             <text x=\"{tx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xv:.2}</text>\n",
            bottom + 5.0,
            bottom + 18.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{ty:.2}\" x2=\"{:.2}\" y2=\"{ty:.2}\" stroke=\"black\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{yv:.2}</text>\n",
            left - 5.0,
            left - 8.0,
            ty + 4.0
        ));
    }
    // Axis names.
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        SVG_H - 10.0,
        plot.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"15\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.2})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        plot.y_label
    ));
    // Unit-diagonal reference, clipped to the shared data range.
    if plot.diagonal {
        let lo = x0.max(y0);
        let hi = x1.min(y1);
        if lo < hi {
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
                px(lo),
                py(lo),
                px(hi),
                py(hi)
            ));
        }
    }
    for &(x, y) in plot.points {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\" fill-opacity=\"0.8\"/>\n",
            px(x),
            py(y)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_scatter(path: &Path, plot: &Scatter) -> Result<(), CliError> {
    std::fs::write(path, render_scatter(plot))?;
    Ok(())
}
