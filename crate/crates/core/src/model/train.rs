//! Minibatch SGD over ordered pairs.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backprop::backward_refs;
use super::{ModelError, ScorerModel, Tensor, DEFAULT_EPSILON};
use crate::dataset::{CorpusManifest, OrderedPair, Split};

/// Training hyperparameters. Defaults are a standard small-convnet recipe;
/// every field can be overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Passes over the train split. Zero is allowed and trains nothing.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Momentum coefficient in [0, 1).
    pub momentum: f64,
    /// L2 weight decay, applied to all parameters.
    pub weight_decay: f64,
    /// Ranking margin used for the hinge during this run.
    pub epsilon: f64,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Validation cadence in batches.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 64,
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            eval_every: 200,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: &str| Err(ModelError::InvalidConfig(msg.into()));
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail("learning_rate must be finite and > 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail("momentum must be in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail("weight_decay must be finite and >= 0");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return fail("epsilon must be finite and > 0");
        }
        if self.eval_every == 0 {
            return fail("eval_every must be >= 1");
        }
        Ok(())
    }
}

/// One validation measurement during training.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// Number of optimizer steps completed when this record was taken.
    pub batch: usize,
    /// Mean training loss over the batches since the previous record.
    pub train_loss: f64,
    /// Pairwise true-positive rate on the validation split, in percent.
    pub val_tp_rate: f64,
}

/// Trains on a manifest's train split, validating on its val split.
/// `base_dir` is the corpus directory the manifest's patch paths are
/// relative to. See [`train_on_pairs`] for the semantics.
pub fn train(
    model: &ScorerModel,
    manifest: &CorpusManifest,
    base_dir: &Path,
    cfg: &TrainConfig,
) -> Result<(ScorerModel, Vec<EvalRecord>), ModelError> {
    let train_pairs = manifest.load_pairs(base_dir, Split::Train)?;
    let val_pairs = manifest.load_pairs(base_dir, Split::Val)?;
    train_on_pairs(model, &train_pairs, &val_pairs, cfg)
}

/// SGD with momentum and weight decay over shuffled minibatches.
///
/// Shuffling is driven by `cfg.seed` alone, gradients reduce over a fixed
/// chunk grid, and evaluation points depend only on the batch counter, so
/// two runs with the same inputs return identical weights and history.
/// Validation TP is measured every `eval_every` batches and once more at the
/// end; the weights returned are the ones with the best validation TP
/// (earliest wins ties). A non-finite training loss aborts with
/// [`ModelError::DivergenceDetected`].
pub fn train_on_pairs(
    model: &ScorerModel,
    train_pairs: &[OrderedPair],
    val_pairs: &[OrderedPair],
    cfg: &TrainConfig,
) -> Result<(ScorerModel, Vec<EvalRecord>), ModelError> {
    cfg.validate()?;
    if train_pairs.is_empty() {
        return Err(ModelError::EmptySplit("train"));
    }
    if val_pairs.is_empty() {
        return Err(ModelError::EmptySplit("val"));
    }
    let mut cur = model.clone();
    cur.set_epsilon(cfg.epsilon)?;
    let mut history = Vec::new();
    if cfg.epochs == 0 {
        return Ok((cur, history));
    }

    let mut velocity: Vec<Tensor> = cur.params().iter().map(|t| Tensor::zeros(t.shape())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices: Vec<usize> = (0..train_pairs.len()).collect();
    let batches_per_epoch = train_pairs.len().div_ceil(cfg.batch_size);
    let total_batches = cfg.epochs * batches_per_epoch;

    let mut best: Option<(f64, ScorerModel)> = None;
    let mut batch_count = 0usize;
    let mut loss_acc = 0.0;
    let mut loss_batches = 0usize;
    for _ in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(cfg.batch_size) {
            let batch: Vec<&OrderedPair> = chunk.iter().map(|&i| &train_pairs[i]).collect();
            let (loss, grads) = backward_refs(&cur, &batch, cfg.epsilon)?;
            batch_count += 1;
            if !loss.is_finite() {
                return Err(ModelError::DivergenceDetected { batch: batch_count });
            }
            loss_acc += loss;
            loss_batches += 1;
            for ((p, v), g) in cur
                .params_mut()
                .iter_mut()
                .zip(&mut velocity)
                .zip(grads.tensors())
            {
                for ((pv, vv), gv) in p
                    .data_mut()
                    .iter_mut()
                    .zip(v.data_mut())
                    .zip(g.data())
                {
                    *vv = cfg.momentum * *vv + gv + cfg.weight_decay * *pv;
                    *pv -= cfg.learning_rate * *vv;
                }
            }
            if batch_count.is_multiple_of(cfg.eval_every) || batch_count == total_batches {
                let val_tp_rate = crate::ranking::tp_rate(&cur, val_pairs)
                    .expect("validation split checked nonempty");
                let record = EvalRecord {
                    batch: batch_count,
                    train_loss: loss_acc / loss_batches as f64,
                    val_tp_rate,
                };
                loss_acc = 0.0;
                loss_batches = 0;
                if best
                    .as_ref()
                    .is_none_or(|(tp, _)| record.val_tp_rate > *tp)
                {
                    best = Some((record.val_tp_rate, cur.clone()));
                }
                history.push(record);
            }
        }
    }
    let (_, best_model) = best.expect("final batch always evaluates");
    Ok((best_model, history))
}
