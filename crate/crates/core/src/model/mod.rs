//! The learnable scorer: a small convolutional network mapping a 32×32 RGB
//! patch to a single real distortion score.
//!
//! Two patches are compared by evaluating the same network on both (shared
//! weights) and comparing the scalars, so everything downstream only ever
//! needs `forward`. Training minimizes a squared hinge ranking loss over
//! ordered pairs: a pair costs `max(0, f(a) + ε − f(b))²`, which is zero
//! exactly when the less-distorted patch scores at least ε below the other.
//!
//! Gradients are hand-derived for the fixed layer set (3×3 conv / ReLU /
//! global average pool / dense) and checked against central finite
//! differences in the tests. All arithmetic is in `f64`; weights are stored
//! as `f32` on disk, and freshly initialized weights are exactly
//! f32-representable so a save/load round trip is the identity.

mod backprop;
mod checkpoint;
mod train;

pub use backprop::{backward, batch_loss, hinge_loss, pair_loss};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use train::{train, train_on_pairs, EvalRecord, TrainConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::imaging::{Patch, PATCH_SIZE};

/// Default ranking margin. Any fixed positive margin only sets the score
/// scale (the hinge is invariant under shifting both scores); 0.1 keeps
/// early gradients well-conditioned under He initialization.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown architecture id `{0}`")]
    UnknownArch(String),
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("no pairs in the {0} split")]
    EmptySplit(&'static str),
    #[error("training diverged: loss became non-finite at batch {batch}")]
    DivergenceDetected { batch: usize },
    #[error("checkpoint version mismatch: {0}")]
    VersionMismatch(String),
    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One layer of the scorer. Convolutions are always 3×3 with padding 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        in_ch: usize,
        out_ch: usize,
        stride: usize,
    },
    Relu,
    GlobalAvgPool,
    Dense {
        inputs: usize,
        outputs: usize,
    },
}

/// A dense row-major value block with an explicit shape. The shape is fixed
/// at construction; only the values are mutable.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Per-weight-tensor gradients, shape-matched to a model's parameters.
#[derive(Debug, Clone)]
pub struct GradientSet {
    tensors: Vec<Tensor>,
}

impl GradientSet {
    fn zeros_like(params: &[Tensor]) -> Self {
        GradientSet {
            tensors: params.iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, k: f64) {
        for t in &mut self.tensors {
            for x in &mut t.data {
                *x *= k;
            }
        }
    }
}

/// Returns the layer stack for a registered architecture id, if known.
///
/// `small-v1` is a four-stage scorer: three stride-2 3×3 convolutions
/// (3→8→16→32 channels, feature maps 32→16→8→4) with ReLU after each,
/// a global average pool, and a dense head to one scalar.
pub fn arch_layers(arch_id: &str) -> Option<Vec<LayerSpec>> {
    match arch_id {
        "small-v1" => Some(vec![
            LayerSpec::Conv {
                in_ch: 3,
                out_ch: 8,
                stride: 2,
            },
            LayerSpec::Relu,
            LayerSpec::Conv {
                in_ch: 8,
                out_ch: 16,
                stride: 2,
            },
            LayerSpec::Relu,
            LayerSpec::Conv {
                in_ch: 16,
                out_ch: 32,
                stride: 2,
            },
            LayerSpec::Relu,
            LayerSpec::GlobalAvgPool,
            LayerSpec::Dense {
                inputs: 32,
                outputs: 1,
            },
        ]),
        _ => None,
    }
}

/// The patch scorer: a layer stack with its weights and ranking margin.
///
/// `forward` is a pure function of `(weights, patch)`, so it is safe to call
/// from any number of threads concurrently.
#[derive(Debug, Clone)]
pub struct ScorerModel {
    arch_id: String,
    layers: Vec<LayerSpec>,
    /// Activation shapes as (channels, height, width); `shapes[0]` is the
    /// input, `shapes[i + 1]` the output of layer `i`.
    shapes: Vec<(usize, usize, usize)>,
    /// Weight then bias for each parameterized layer, in layer order.
    params: Vec<Tensor>,
    epsilon: f64,
}

impl ScorerModel {
    /// Builds a registered architecture with He-normal weights
    /// (std = sqrt(2 / fan_in)) and zero biases, deterministically per seed.
    pub fn init(arch_id: &str, seed: u64) -> Result<Self, ModelError> {
        let layers =
            arch_layers(arch_id).ok_or_else(|| ModelError::UnknownArch(arch_id.to_string()))?;
        Self::with_layers(arch_id, layers, DEFAULT_EPSILON, seed)
    }

    /// Builds an arbitrary (validated) layer stack. The stack must map the
    /// 32×32×3 input down to a single scalar.
    pub fn with_layers(
        arch_id: &str,
        layers: Vec<LayerSpec>,
        epsilon: f64,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(ModelError::InvalidConfig(
                "epsilon must be finite and > 0".into(),
            ));
        }
        let shapes = infer_shapes(&layers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = init_params(&layers, &mut rng);
        Ok(ScorerModel {
            arch_id: arch_id.to_string(),
            layers,
            shapes,
            params,
            epsilon,
        })
    }

    pub fn arch_id(&self) -> &str {
        &self.arch_id
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<(), ModelError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(ModelError::InvalidConfig(
                "epsilon must be finite and > 0".into(),
            ));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    /// Weight and bias tensors, weight-then-bias per parameterized layer.
    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Mutable access to the weight values (shapes stay fixed).
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Scores a patch. Higher means more distorted once trained.
    pub fn forward(&self, patch: &Patch) -> f64 {
        *self
            .forward_trace(patch)
            .last()
            .expect("network has at least one layer")
            .first()
            .expect("network output is a scalar")
    }

    /// Runs the network keeping every intermediate activation: entry `i` is
    /// the input of layer `i`, and the last entry is the final output.
    pub(crate) fn forward_trace(&self, patch: &Patch) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let (c0, h0, w0) = self.shapes[0];
        let mut input = vec![0.0f64; c0 * h0 * w0];
        for c in 0..c0 {
            for y in 0..h0 {
                for x in 0..w0 {
                    input[(c * h0 + y) * w0 + x] = f64::from(patch.get(x, y, c));
                }
            }
        }
        acts.push(input);
        let mut p = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            let out = match *layer {
                LayerSpec::Conv { stride, .. } => {
                    let out = conv_forward(
                        &acts[i],
                        self.shapes[i],
                        self.params[p].data(),
                        self.params[p + 1].data(),
                        stride,
                        self.shapes[i + 1],
                    );
                    p += 2;
                    out
                }
                LayerSpec::Relu => acts[i].iter().map(|&v| v.max(0.0)).collect(),
                LayerSpec::GlobalAvgPool => gap_forward(&acts[i], self.shapes[i]),
                LayerSpec::Dense { .. } => {
                    let out = dense_forward(
                        &acts[i],
                        self.params[p].data(),
                        self.params[p + 1].data(),
                    );
                    p += 2;
                    out
                }
            };
            acts.push(out);
        }
        acts
    }
}

/// Validates a layer stack against the fixed 32×32×3 input and returns each
/// activation shape, input first.
fn infer_shapes(layers: &[LayerSpec]) -> Result<Vec<(usize, usize, usize)>, ModelError> {
    if layers.is_empty() {
        return Err(ModelError::InvalidArch("layer stack is empty".into()));
    }
    let mut shapes = vec![(3usize, PATCH_SIZE, PATCH_SIZE)];
    for (i, layer) in layers.iter().enumerate() {
        let (c, h, w) = *shapes.last().expect("shapes is never empty");
        let bad = |msg: String| Err(ModelError::InvalidArch(format!("layer {i}: {msg}")));
        let next = match *layer {
            LayerSpec::Conv {
                in_ch,
                out_ch,
                stride,
            } => {
                if in_ch != c {
                    return bad(format!("conv expects {in_ch} input channels, got {c}"));
                }
                if out_ch == 0 || stride == 0 {
                    return bad("conv needs out_ch >= 1 and stride >= 1".into());
                }
                // 3×3 kernel with padding 1: out = floor((d − 1)/stride) + 1.
                ((out_ch), (h - 1) / stride + 1, (w - 1) / stride + 1)
            }
            LayerSpec::Relu => (c, h, w),
            LayerSpec::GlobalAvgPool => (c, 1, 1),
            LayerSpec::Dense { inputs, outputs } => {
                if (h, w) != (1, 1) {
                    return bad(format!("dense needs a 1×1 spatial input, got {h}×{w}"));
                }
                if inputs != c {
                    return bad(format!("dense expects {inputs} inputs, got {c}"));
                }
                if outputs == 0 {
                    return bad("dense needs outputs >= 1".into());
                }
                (outputs, 1, 1)
            }
        };
        shapes.push(next);
    }
    if *shapes.last().expect("shapes is never empty") != (1, 1, 1) {
        return Err(ModelError::InvalidArch(format!(
            "network must end in a single scalar, ends in {:?}",
            shapes.last().expect("shapes is never empty")
        )));
    }
    Ok(shapes)
}

/// Weight/bias shapes for each parameterized layer, weight first.
fn param_shapes(layers: &[LayerSpec]) -> Vec<Vec<usize>> {
    let mut shapes = Vec::new();
    for layer in layers {
        match *layer {
            LayerSpec::Conv { in_ch, out_ch, .. } => {
                shapes.push(vec![out_ch, in_ch, 3, 3]);
                shapes.push(vec![out_ch]);
            }
            LayerSpec::Dense { inputs, outputs } => {
                shapes.push(vec![outputs, inputs]);
                shapes.push(vec![outputs]);
            }
            LayerSpec::Relu | LayerSpec::GlobalAvgPool => {}
        }
    }
    shapes
}

/// He-normal weights, zero biases. Every value is rounded through `f32` so
/// that checkpointing a fresh model is lossless.
fn init_params<R: Rng + ?Sized>(layers: &[LayerSpec], rng: &mut R) -> Vec<Tensor> {
    let mut params = Vec::new();
    for shapes in param_shapes(layers).chunks_exact(2) {
        let (w_shape, b_shape) = (&shapes[0], &shapes[1]);
        let fan_in: usize = w_shape[1..].iter().product();
        let std = (2.0 / fan_in as f64).sqrt();
        let mut w = Tensor::zeros(w_shape);
        for v in w.data_mut() {
            *v = f64::from((std * standard_normal(rng)) as f32);
        }
        params.push(w);
        params.push(Tensor::zeros(b_shape));
    }
    params
}

/// One standard normal draw via Box–Muller.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        if u1 > f64::MIN_POSITIVE {
            let u2: f64 = rng.gen();
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// 3×3 convolution, padding 1, arbitrary stride. Planar layout:
/// `data[(c*h + y)*w + x]`. Accumulation order is fixed, so results are
/// identical across runs and thread counts.
fn conv_forward(
    inp: &[f64],
    (ci, hi, wi): (usize, usize, usize),
    w: &[f64],
    b: &[f64],
    stride: usize,
    (co, ho, wo): (usize, usize, usize),
) -> Vec<f64> {
    let mut out = vec![0.0f64; co * ho * wo];
    for oc in 0..co {
        let plane = &mut out[oc * ho * wo..(oc + 1) * ho * wo];
        plane.fill(b[oc]);
        for ic in 0..ci {
            for ky in 0..3usize {
                let Some((oy_lo, oy_hi)) = conv_span(ky, hi, ho, stride) else {
                    continue;
                };
                for kx in 0..3usize {
                    let Some((ox_lo, ox_hi)) = conv_span(kx, wi, wo, stride) else {
                        continue;
                    };
                    let wv = w[((oc * ci + ic) * 3 + ky) * 3 + kx];
                    for oy in oy_lo..=oy_hi {
                        let iy = oy * stride + ky - 1;
                        let irow = (ic * hi + iy) * wi;
                        let orow = oy * wo;
                        for ox in ox_lo..=ox_hi {
                            let ix = ox * stride + kx - 1;
                            plane[orow + ox] += wv * inp[irow + ix];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Inclusive output range along one axis for which the tap `k` lands inside
/// the input (`i = o*stride + k − 1 ∈ [0, in)`), or None if the range is
/// empty.
fn conv_span(k: usize, inp: usize, out: usize, stride: usize) -> Option<(usize, usize)> {
    if k > inp || out == 0 {
        return None;
    }
    let lo = usize::from(k == 0);
    let hi = ((inp - k) / stride).min(out - 1);
    (lo <= hi).then_some((lo, hi))
}

fn gap_forward(inp: &[f64], (c, h, w): (usize, usize, usize)) -> Vec<f64> {
    let n = (h * w) as f64;
    (0..c)
        .map(|ch| inp[ch * h * w..(ch + 1) * h * w].iter().sum::<f64>() / n)
        .collect()
}

fn dense_forward(inp: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let n = inp.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            bias + w[o * n..(o + 1) * n]
                .iter()
                .zip(inp)
                .map(|(wv, x)| wv * x)
                .sum::<f64>()
        })
        .collect()
}
