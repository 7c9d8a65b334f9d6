//! Ranking loss and hand-derived gradients.
//!
//! A training example is an [`OrderedPair`]: patch `a` is less distorted
//! than patch `b`, so the model should score `a` at least ε below `b`.
//! Violations cost `z² = max(0, f(a) + ε − f(b))²`; a batch costs the mean.
//! Both patches go through the same weights, so each pair backpropagates
//! through two branches — upstream `+2z` into the `a` branch and `−2z` into
//! the `b` branch — and the weight gradients are summed across branches.

use rayon::prelude::*;

use super::{GradientSet, LayerSpec, ModelError, ScorerModel};
use crate::dataset::OrderedPair;

/// Number of fixed summation chunks for batch-gradient reduction. The chunk
/// grid depends only on the batch size, and chunks are reduced in index
/// order, so gradients are bit-identical for every thread count.
const GRAD_CHUNKS: usize = 8;

/// Squared hinge on a score pair: `max(0, score_a + epsilon − score_b)²`.
///
/// Zero exactly when `score_b ≥ score_a + epsilon`. Adding a constant to
/// both scores leaves it unchanged. A NaN score yields a NaN loss rather
/// than silently reading as a satisfied margin. `epsilon` must be > 0.
pub fn hinge_loss(score_a: f64, score_b: f64, epsilon: f64) -> f64 {
    debug_assert!(epsilon > 0.0);
    let z = score_a + epsilon - score_b;
    // The `z <= 0` arm excludes NaN, which then propagates through `z * z`.
    if z <= 0.0 {
        0.0
    } else {
        z * z
    }
}

/// Loss of one ordered pair: the hinge on `(f(a), f(b))`.
pub fn pair_loss(model: &ScorerModel, pair: &OrderedPair, epsilon: f64) -> f64 {
    hinge_loss(
        model.forward(pair.patch_a()),
        model.forward(pair.patch_b()),
        epsilon,
    )
}

/// Mean pair loss over a nonempty batch.
pub fn batch_loss(
    model: &ScorerModel,
    pairs: &[OrderedPair],
    epsilon: f64,
) -> Result<f64, ModelError> {
    if pairs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let sum: f64 = pairs.iter().map(|p| pair_loss(model, p, epsilon)).sum();
    Ok(sum / pairs.len() as f64)
}

/// Mean batch loss and its exact analytic gradient with respect to every
/// weight.
///
/// Pairs whose margin is strictly satisfied contribute nothing (the hinge is
/// identically zero there). The reduction runs over a fixed chunk grid (see
/// [`GRAD_CHUNKS`]), so the result does not depend on the thread count.
pub fn backward(
    model: &ScorerModel,
    pairs: &[OrderedPair],
    epsilon: f64,
) -> Result<(f64, GradientSet), ModelError> {
    let refs: Vec<&OrderedPair> = pairs.iter().collect();
    backward_refs(model, &refs, epsilon)
}

pub(crate) fn backward_refs(
    model: &ScorerModel,
    pairs: &[&OrderedPair],
    epsilon: f64,
) -> Result<(f64, GradientSet), ModelError> {
    if pairs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let n = pairs.len();
    let chunk = n.div_ceil(GRAD_CHUNKS);
    let parts: Vec<(f64, GradientSet)> = pairs
        .par_chunks(chunk)
        .map(|part| {
            let mut grads = GradientSet::zeros_like(model.params());
            let mut loss = 0.0;
            for pair in part {
                let acts_a = model.forward_trace(pair.patch_a());
                let acts_b = model.forward_trace(pair.patch_b());
                let score_a = acts_a.last().expect("nonempty trace")[0];
                let score_b = acts_b.last().expect("nonempty trace")[0];
                loss += hinge_loss(score_a, score_b, epsilon);
                let z = score_a + epsilon - score_b;
                if z > 0.0 {
                    backward_branch(model, &acts_a, 2.0 * z, &mut grads);
                    backward_branch(model, &acts_b, -2.0 * z, &mut grads);
                }
            }
            (loss, grads)
        })
        .collect();
    let mut total = GradientSet::zeros_like(model.params());
    let mut loss = 0.0;
    for (part_loss, part_grads) in &parts {
        loss += part_loss;
        total.add_assign(part_grads);
    }
    let inv = 1.0 / n as f64;
    total.scale(inv);
    Ok((loss * inv, total))
}

/// Backpropagates `upstream` (d loss / d score) through one branch,
/// accumulating weight gradients into `grads`.
fn backward_branch(model: &ScorerModel, acts: &[Vec<f64>], upstream: f64, grads: &mut GradientSet) {
    let mut g = vec![upstream];
    let mut p = model.params().len();
    for (i, layer) in model.layers().iter().enumerate().rev() {
        g = match *layer {
            LayerSpec::Conv { stride, .. } => {
                p -= 2;
                let (head, tail) = grads.tensors.split_at_mut(p + 1);
                conv_backward(
                    &acts[i],
                    model.shapes[i],
                    model.params()[p].data(),
                    stride,
                    model.shapes[i + 1],
                    &g,
                    head[p].data_mut(),
                    tail[0].data_mut(),
                )
            }
            LayerSpec::Relu => acts[i]
                .iter()
                .zip(&g)
                .map(|(&x, &gv)| if x > 0.0 { gv } else { 0.0 })
                .collect(),
            LayerSpec::GlobalAvgPool => {
                let (c, h, w) = model.shapes[i];
                let inv = 1.0 / (h * w) as f64;
                let mut out = Vec::with_capacity(c * h * w);
                for &gv in g.iter().take(c) {
                    out.extend(std::iter::repeat_n(gv * inv, h * w));
                }
                out
            }
            LayerSpec::Dense { .. } => {
                p -= 2;
                let (head, tail) = grads.tensors.split_at_mut(p + 1);
                dense_backward(
                    &acts[i],
                    model.params()[p].data(),
                    &g,
                    head[p].data_mut(),
                    tail[0].data_mut(),
                )
            }
        };
    }
}

/// Gradients of a 3×3/pad-1 convolution: accumulates into the weight and
/// bias gradients and returns the gradient with respect to the input.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    inp: &[f64],
    (ci, hi, wi): (usize, usize, usize),
    w: &[f64],
    stride: usize,
    (co, ho, wo): (usize, usize, usize),
    g_out: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let mut g_in = vec![0.0f64; ci * hi * wi];
    for oc in 0..co {
        let gplane = &g_out[oc * ho * wo..(oc + 1) * ho * wo];
        db[oc] += gplane.iter().sum::<f64>();
        for ic in 0..ci {
            for ky in 0..3usize {
                let Some((oy_lo, oy_hi)) = super::conv_span(ky, hi, ho, stride) else {
                    continue;
                };
                for kx in 0..3usize {
                    let Some((ox_lo, ox_hi)) = super::conv_span(kx, wi, wo, stride) else {
                        continue;
                    };
                    let widx = ((oc * ci + ic) * 3 + ky) * 3 + kx;
                    let wv = w[widx];
                    let mut dw_acc = 0.0;
                    for oy in oy_lo..=oy_hi {
                        let iy = oy * stride + ky - 1;
                        let irow = (ic * hi + iy) * wi;
                        let orow = oy * wo;
                        for ox in ox_lo..=ox_hi {
                            let ix = ox * stride + kx - 1;
                            let go = gplane[orow + ox];
                            dw_acc += go * inp[irow + ix];
                            g_in[irow + ix] += wv * go;
                        }
                    }
                    dw[widx] += dw_acc;
                }
            }
        }
    }
    g_in
}

/// Gradients of a dense layer; returns the gradient w.r.t. the input.
fn dense_backward(
    inp: &[f64],
    w: &[f64],
    g_out: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let n = inp.len();
    let mut g_in = vec![0.0f64; n];
    for (o, &go) in g_out.iter().enumerate() {
        db[o] += go;
        let row = &w[o * n..(o + 1) * n];
        let drow = &mut dw[o * n..(o + 1) * n];
        for i in 0..n {
            drow[i] += go * inp[i];
            g_in[i] += go * row[i];
        }
    }
    g_in
}
