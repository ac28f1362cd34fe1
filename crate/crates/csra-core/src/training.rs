//! Head training on precomputed feature tensors: binary cross-entropy loss,
//! hand-derived analytic gradients, and SGD with momentum, decoupled weight
//! decay, and linear warmup.
//!
//! The loss is averaged over classes and over the batch. For one head with
//! temperature `T`, lambda `l`, and per-location scores `s_k = x_k . m_i`,
//! the logit is `y = mean(s) + l * sum_k p_k s_k` with `p = softmax_T(s)`,
//! and the score-space derivative is
//!
//! ```text
//! dy/ds_k = 1/n + l * p_k * (1 + T * (s_k - sum_j p_j s_j))
//! ```
//!
//! (`m_i` enters both through the scores and through the attention weights,
//! hence the second factor). At `T = inf` the attention term is the max over
//! locations and the subgradient puts all mass on the argmax, lowest index on
//! ties. The weight gradient is then `dL/dm_i = dL/dy * sum_k (dy/ds_k) x_k`.
//! All of this is validated against central finite differences in the tests
//! and the acceptance suite.
//!
//! Everything is deterministic given the seed: initialization, shuffling, and
//! accumulation order are fixed, so two runs with the same inputs produce
//! bitwise-identical weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attention::{self, ClassifierWeights, FeatureTensor};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::metrics::{self, EvalSet};
use crate::multihead::{self, HeadConfig, MultiHeadModel};
use crate::tensor::{self, Temperature, Tensor};

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Which pooled feature feeds the classifier.
///
/// `Combined` is the full residual head; the other two are the ablations it
/// is measured against (global average only, attention pooling only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    /// `f = g`: plain global average pooling.
    Average,
    /// `f = a^i`: attention pooling alone (lambda unused).
    Spatial,
    /// `f = g + lambda * a^i`: the residual head.
    Combined,
}

/// Feature tensors with per-class labels; all samples share the channel
/// count, while spatial extents may vary per sample.
#[derive(Debug, Clone)]
pub struct LabeledFeatureSet {
    samples: Vec<(FeatureTensor, Vec<Label>)>,
    classes: usize,
}

impl LabeledFeatureSet {
    pub fn new(samples: Vec<(FeatureTensor, Vec<Label>)>) -> Result<Self> {
        let Some((first, first_labels)) = samples.first() else {
            return Err(Error::InvalidParameter {
                message: "labeled feature set must not be empty".to_string(),
            });
        };
        let channels = first.channels();
        let classes = first_labels.len();
        if classes == 0 {
            return Err(Error::InvalidParameter {
                message: "labeled feature set needs at least one class".to_string(),
            });
        }
        for (i, (x, labels)) in samples.iter().enumerate() {
            if x.channels() != channels {
                return Err(Error::ShapeMismatch {
                    op: "LabeledFeatureSet::new",
                    left: vec![channels],
                    right: vec![x.channels()],
                });
            }
            if labels.len() != classes {
                return Err(Error::InvalidParameter {
                    message: format!(
                        "sample {i} has {} labels, expected {classes}",
                        labels.len()
                    ),
                });
            }
        }
        Ok(Self { samples, classes })
    }

    pub fn samples(&self) -> &[(FeatureTensor, Vec<Label>)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn channels(&self) -> usize {
        self.samples[0].0.channels()
    }
}

/// SGD hyperparameters. Defaults follow the published recipe for the head:
/// learning rate 0.1, momentum 0.9, weight decay 1e-4, one warmup epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub warmup_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            warmup_epochs: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter {
                message: "epochs must be >= 1".to_string(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter {
                message: "batch size must be >= 1".to_string(),
            });
        }
        for (name, v) in [
            ("learning rate", self.learning_rate),
            ("momentum", self.momentum),
            ("weight decay", self.weight_decay),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    message: format!("{name} must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Per-epoch training record returned alongside the final model.
#[derive(Debug, Clone)]
pub struct LossReport {
    /// Mean loss over all samples, one entry per epoch.
    pub epoch_loss: Vec<f64>,
    /// Held-out mAP after each epoch, when a validation split was given.
    pub val_map: Option<Vec<f64>>,
    /// Learning-rate schedule actually applied.
    pub schedule: String,
    /// Loss reduction convention.
    pub loss_reduction: &'static str,
}

/// Numerically stable binary cross entropy, averaged over classes.
///
/// Each term is `max(x, 0) - x*y + ln(1 + exp(-|x|))` for logit `x` and
/// target `y` in {0, 1}.
pub fn bce_loss(logits: &[f64], targets: &[f64]) -> Result<f64> {
    if logits.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            op: "bce_loss",
            left: vec![logits.len()],
            right: vec![targets.len()],
        });
    }
    debug_assert!(targets.iter().all(|&y| y == 0.0 || y == 1.0));
    let mut acc = 0.0;
    for (&x, &y) in logits.iter().zip(targets) {
        acc += x.max(0.0) - x * y + (-x.abs()).exp().ln_1p();
    }
    Ok(acc / logits.len() as f64)
}

/// Gradient of the per-sample loss with respect to every head's weights,
/// one `C x d` tensor per head. Ignore labels are treated as negative, the
/// training-time convention.
pub fn loss_grad(
    x: &FeatureTensor,
    model: &MultiHeadModel,
    labels: &[Label],
) -> Result<Vec<Tensor>> {
    if labels.len() != model.classes() {
        return Err(Error::ShapeMismatch {
            op: "loss_grad",
            left: vec![model.classes()],
            right: vec![labels.len()],
        });
    }
    if x.channels() != model.channels() {
        return Err(Error::ShapeMismatch {
            op: "loss_grad",
            left: vec![model.channels()],
            right: vec![x.channels()],
        });
    }
    let targets: Vec<f64> = labels.iter().map(|l| l.training_target()).collect();
    let rows: Vec<&[f64]> = model
        .heads()
        .iter()
        .map(|h| h.as_tensor().data())
        .collect();
    let (_, grads) = forward_backward(
        x,
        &rows,
        model.config().temperatures(),
        model.config().lambda(),
        Pooling::Combined,
        &targets,
        model.classes(),
        model.channels(),
    );
    let (c, d) = (model.classes(), model.channels());
    Ok(grads
        .into_iter()
        .map(|g| Tensor::from_parts(vec![c, d], g))
        .collect())
}

/// Pooling-aware fused logits; `Pooling::Combined` matches
/// [`multihead::multihead_logits`] bit for bit.
pub fn forward_logits(
    x: &FeatureTensor,
    model: &MultiHeadModel,
    pooling: Pooling,
) -> Result<Vec<f64>> {
    if x.channels() != model.channels() {
        return Err(Error::ShapeMismatch {
            op: "forward_logits",
            left: vec![model.channels()],
            right: vec![x.channels()],
        });
    }
    let rows: Vec<&[f64]> = model
        .heads()
        .iter()
        .map(|h| h.as_tensor().data())
        .collect();
    Ok(forward_only(
        x,
        &rows,
        model.config().temperatures(),
        model.config().lambda(),
        pooling,
        model.classes(),
        model.channels(),
    ))
}

/// Trains a multi-head model with the full residual head.
pub fn train(
    data: &LabeledFeatureSet,
    head_cfg: &HeadConfig,
    train_cfg: &TrainConfig,
) -> Result<(MultiHeadModel, LossReport)> {
    train_with_options(data, head_cfg, train_cfg, Pooling::Combined, None)
}

/// Trains with an explicit pooling variant and an optional held-out split
/// whose mAP is recorded after every epoch.
pub fn train_with_options(
    data: &LabeledFeatureSet,
    head_cfg: &HeadConfig,
    train_cfg: &TrainConfig,
    pooling: Pooling,
    validation: Option<&LabeledFeatureSet>,
) -> Result<(MultiHeadModel, LossReport)> {
    train_cfg.validate()?;
    let (classes, channels) = (data.classes(), data.channels());
    if let Some(val) = validation {
        if val.classes() != classes || val.channels() != channels {
            return Err(Error::ShapeMismatch {
                op: "train_with_options",
                left: vec![classes, channels],
                right: vec![val.classes(), val.channels()],
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    let mut heads = init_heads(&mut rng, head_cfg, classes, channels)?;
    let mut velocity = vec![vec![0.0; classes * channels]; head_cfg.heads()];

    let n = data.len();
    let steps_per_epoch = n.div_ceil(train_cfg.batch_size);
    let warmup_steps = train_cfg.warmup_epochs * steps_per_epoch;
    let temps = head_cfg.temperatures();
    let lambda = head_cfg.lambda();

    let targets: Vec<Vec<f64>> = data
        .samples()
        .iter()
        .map(|(_, labels)| labels.iter().map(|l| l.training_target()).collect())
        .collect();

    let mut epoch_loss = Vec::with_capacity(train_cfg.epochs);
    let mut val_map = validation.map(|_| Vec::with_capacity(train_cfg.epochs));
    let mut indices: Vec<usize> = (0..n).collect();
    let mut global_step = 0usize;

    for epoch in 0..train_cfg.epochs {
        shuffle(&mut rng, &mut indices);
        let mut loss_sum = 0.0;

        for (batch_no, batch) in indices.chunks(train_cfg.batch_size).enumerate() {
            let mut grad_acc = vec![vec![0.0; classes * channels]; head_cfg.heads()];
            let mut batch_loss_sum = 0.0;
            for &s in batch {
                let rows: Vec<&[f64]> = heads.iter().map(|h| h.as_slice()).collect();
                let (loss, grads) = forward_backward(
                    &data.samples()[s].0,
                    &rows,
                    temps,
                    lambda,
                    pooling,
                    &targets[s],
                    classes,
                    channels,
                );
                batch_loss_sum += loss;
                for (acc, g) in grad_acc.iter_mut().zip(&grads) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += v;
                    }
                }
            }
            if !batch_loss_sum.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_no,
                });
            }
            loss_sum += batch_loss_sum;

            let inv_batch = 1.0 / batch.len() as f64;
            let lr = if global_step < warmup_steps {
                train_cfg.learning_rate * (global_step + 1) as f64 / warmup_steps as f64
            } else {
                train_cfg.learning_rate
            };
            let shrink = 1.0 - lr * train_cfg.weight_decay;
            for ((w, v), acc) in heads.iter_mut().zip(&mut velocity).zip(&grad_acc) {
                for ((wi, vi), &gi) in w.iter_mut().zip(v.iter_mut()).zip(acc) {
                    *vi = train_cfg.momentum * *vi + gi * inv_batch;
                    *wi = shrink * *wi - lr * *vi;
                }
            }
            if head_cfg.normalize() {
                for (h, w) in heads.iter_mut().enumerate() {
                    renormalize_rows(w, classes, channels, h)?;
                }
            }
            global_step += 1;
        }

        epoch_loss.push(loss_sum / n as f64);

        if let (Some(map_track), Some(val)) = (val_map.as_mut(), validation) {
            let model = assemble_model(head_cfg, &heads, classes, channels)?;
            map_track.push(validation_map(val, &model, pooling)?);
        }
    }

    let model = assemble_model(head_cfg, &heads, classes, channels)?;
    let report = LossReport {
        epoch_loss,
        val_map,
        schedule: format!(
            "linear warmup over {} epoch(s), then constant",
            train_cfg.warmup_epochs
        ),
        loss_reduction: "mean over classes, mean over batch",
    };
    Ok((model, report))
}

/// Held-out mAP of a model under a pooling variant (scores are sigmoids of
/// the fused logits).
pub fn validation_map(
    data: &LabeledFeatureSet,
    model: &MultiHeadModel,
    pooling: Pooling,
) -> Result<f64> {
    let (n, c) = (data.len(), data.classes());
    let mut scores = Vec::with_capacity(n * c);
    let mut labels = Vec::with_capacity(n * c);
    for (x, sample_labels) in data.samples() {
        let logits = forward_logits(x, model, pooling)?;
        scores.extend(logits.iter().map(|&y| sigmoid(y)));
        labels.extend_from_slice(sample_labels);
    }
    let eval = EvalSet::new(n, c, scores, labels)?;
    Ok(metrics::mean_average_precision(&eval)?.map)
}

fn assemble_model(
    head_cfg: &HeadConfig,
    heads: &[Vec<f64>],
    classes: usize,
    channels: usize,
) -> Result<MultiHeadModel> {
    let blocks = heads
        .iter()
        .map(|h| {
            ClassifierWeights::new(Tensor::new(vec![classes, channels], h.clone())?)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiHeadModel::new(head_cfg.clone(), blocks)
}

/// Uniform init in `[-1/sqrt(d), 1/sqrt(d))`, row-normalized when the config
/// asks for it. Heads are drawn in order, each row-major.
fn init_heads(
    rng: &mut ChaCha8Rng,
    head_cfg: &HeadConfig,
    classes: usize,
    channels: usize,
) -> Result<Vec<Vec<f64>>> {
    let bound = 1.0 / (channels as f64).sqrt();
    let mut heads = Vec::with_capacity(head_cfg.heads());
    for h in 0..head_cfg.heads() {
        let mut w: Vec<f64> = (0..classes * channels)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        if head_cfg.normalize() {
            renormalize_rows(&mut w, classes, channels, h)?;
        }
        heads.push(w);
    }
    Ok(heads)
}

fn renormalize_rows(w: &mut [f64], classes: usize, channels: usize, _head: usize) -> Result<()> {
    for i in 0..classes {
        let row = &mut w[i * channels..(i + 1) * channels];
        let norm = multihead::l2_norm(row);
        if norm < 1e-12 {
            return Err(Error::DegenerateClassifier { row: i, norm });
        }
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    Ok(())
}

/// Fisher-Yates with the shared stream; part of the determinism contract.
fn shuffle(rng: &mut ChaCha8Rng, indices: &mut [usize]) {
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}

/// Per-location scores for one class from raw weight storage.
fn class_scores(x: &FeatureTensor, row: &[f64], out: &mut [f64]) {
    let n = x.locations();
    debug_assert_eq!(out.len(), n);
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, &m) in row.iter().enumerate() {
            acc += x.value(c, k) * m;
        }
        *o = acc;
    }
}

/// Logit of one score row under a pooling variant.
fn pooled_row_logit(row: &[f64], t: Temperature, lambda: f64, pooling: Pooling) -> f64 {
    match pooling {
        Pooling::Average => tensor::mean_slice(row),
        Pooling::Spatial => attention_term(row, t),
        Pooling::Combined => attention::score_row_logit(row, t, lambda),
    }
}

fn attention_term(row: &[f64], t: Temperature) -> f64 {
    match t {
        Temperature::Infinite => tensor::max_slice(row),
        Temperature::Finite(_) => {
            let mut probs = vec![0.0; row.len()];
            tensor::softmax_slice(row, t, &mut probs);
            tensor::dot(&probs, row)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn forward_only(
    x: &FeatureTensor,
    heads: &[&[f64]],
    temps: &[Temperature],
    lambda: f64,
    pooling: Pooling,
    classes: usize,
    channels: usize,
) -> Vec<f64> {
    let n = x.locations();
    let mut logits = vec![0.0; classes];
    let mut row = vec![0.0; n];
    for (head, &t) in heads.iter().zip(temps) {
        for (i, logit) in logits.iter_mut().enumerate() {
            class_scores(x, &head[i * channels..(i + 1) * channels], &mut row);
            *logit += pooled_row_logit(&row, t, lambda, pooling);
        }
    }
    logits
}

/// Per-sample loss and per-head weight gradients.
///
/// Score rows for every head and class are computed once and reused for the
/// backward pass.
#[allow(clippy::too_many_arguments)]
fn forward_backward(
    x: &FeatureTensor,
    heads: &[&[f64]],
    temps: &[Temperature],
    lambda: f64,
    pooling: Pooling,
    targets: &[f64],
    classes: usize,
    channels: usize,
) -> (f64, Vec<Vec<f64>>) {
    let n = x.locations();
    let inv_n = 1.0 / n as f64;

    // Forward: cache score rows, accumulate fused logits.
    let mut score_rows = vec![vec![0.0; n]; heads.len() * classes];
    let mut logits = vec![0.0; classes];
    for (h, (head, &t)) in heads.iter().zip(temps).enumerate() {
        for i in 0..classes {
            let row = &mut score_rows[h * classes + i];
            class_scores(x, &head[i * channels..(i + 1) * channels], row);
            logits[i] += pooled_row_logit(row, t, lambda, pooling);
        }
    }
    let loss = bce_loss(&logits, targets).expect("lengths validated by caller");

    // Backward: dL/dy_i, then per head the score-space weights dy/ds_k, then
    // the channel-space gradient row coeff * sum_k (dy/ds_k) x_k.
    let inv_classes = 1.0 / classes as f64;
    let coeffs: Vec<f64> = logits
        .iter()
        .zip(targets)
        .map(|(&y_hat, &y)| (sigmoid(y_hat) - y) * inv_classes)
        .collect();

    let mut grads = vec![vec![0.0; classes * channels]; heads.len()];
    let mut score_weights = vec![0.0; n];
    let mut probs = vec![0.0; n];
    for (h, &t) in temps.iter().enumerate() {
        for i in 0..classes {
            let row = &score_rows[h * classes + i];
            score_space_weights(
                row,
                t,
                lambda,
                pooling,
                inv_n,
                &mut probs,
                &mut score_weights,
            );
            let grad_row = &mut grads[h][i * channels..(i + 1) * channels];
            for (k, &w_k) in score_weights.iter().enumerate() {
                if w_k == 0.0 {
                    continue;
                }
                for (c, g) in grad_row.iter_mut().enumerate() {
                    *g += w_k * x.value(c, k);
                }
            }
            let coeff = coeffs[i];
            for g in grad_row.iter_mut() {
                *g *= coeff;
            }
        }
    }
    (loss, grads)
}

/// `dy/ds_k` for one score row under a pooling variant.
fn score_space_weights(
    row: &[f64],
    t: Temperature,
    lambda: f64,
    pooling: Pooling,
    inv_n: f64,
    probs: &mut [f64],
    out: &mut [f64],
) {
    let average_part = match pooling {
        Pooling::Average => {
            out.fill(inv_n);
            return;
        }
        Pooling::Spatial => 0.0,
        Pooling::Combined => {
            if lambda == 0.0 {
                out.fill(inv_n);
                return;
            }
            inv_n
        }
    };
    let scale = match pooling {
        Pooling::Spatial => 1.0,
        _ => lambda,
    };
    match t {
        Temperature::Infinite => {
            // Subgradient of the max: all mass at the (lowest-index) argmax.
            let k_star = tensor::argmax_slice(row);
            for (k, o) in out.iter_mut().enumerate() {
                *o = average_part + if k == k_star { scale } else { 0.0 };
            }
        }
        Temperature::Finite(t) => {
            tensor::softmax_slice(row, Temperature::Finite(t), probs);
            let att = tensor::dot(probs, row);
            for ((o, &p_k), &s_k) in out.iter_mut().zip(probs.iter()).zip(row) {
                *o = average_part + scale * p_k * (1.0 + t * (s_k - att));
            }
        }
    }
}
