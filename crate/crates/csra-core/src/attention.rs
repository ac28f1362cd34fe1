//! Class-specific residual attention over a precomputed feature tensor.
//!
//! The pipeline per image and class `i`:
//!
//! ```text
//! scores[i,k] = x_k . m_i                      raw per-location class scores
//! s^i         = softmax_T(scores[i,.])         spatial attention for class i
//! a^i         = sum_k s^i_k x_k                class-specific pooled feature
//! g           = (1/n) sum_k x_k                global average feature
//! f^i         = g + lambda a^i                 residual fusion
//! y^i         = m_i . f^i                      logit
//! ```
//!
//! Expanding `y^i` in terms of the score tensor gives the equivalent form
//! `mean_k(scores) + lambda * sum_k softmax_T(scores)_k scores_k`, which never
//! materializes `a^i`. Both routes are implemented: [`csra_logits`] is the
//! production score path, [`csra_logits_via_features`] the feature path, and
//! the two agree to within rounding (enforced by tests). At `T = Infinite`
//! the attention collapses to max pooling, so the logit becomes
//! `mean + lambda * max` ([`max_limit_logits`]), which is also the training-free
//! rescoring trick for pretrained average-pooling models.
//!
//! Spatial locations are flattened row-major (height outer, width inner);
//! the heatmap exporter relies on this order.

use crate::error::{Error, Result};
use crate::tensor::{self, Temperature, Tensor};

/// A `d x h x w` activation block for one image, the unit attention operates on.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    values: Tensor,
}

impl FeatureTensor {
    /// Wraps a rank-3 tensor laid out `[channels, height, width]`.
    pub fn new(values: Tensor) -> Result<Self> {
        if values.rank() != 3 {
            return Err(Error::ShapeMismatch {
                op: "FeatureTensor::new",
                left: values.dims().to_vec(),
                right: vec![],
            });
        }
        Ok(Self { values })
    }

    pub fn channels(&self) -> usize {
        self.values.dims()[0]
    }

    pub fn height(&self) -> usize {
        self.values.dims()[1]
    }

    pub fn width(&self) -> usize {
        self.values.dims()[2]
    }

    /// Number of spatial locations `n = h * w`.
    pub fn locations(&self) -> usize {
        self.height() * self.width()
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.values
    }

    /// Channel `c` at flattened location `k` (row-major over height then width).
    #[inline]
    pub fn value(&self, c: usize, k: usize) -> f64 {
        self.values.data()[c * self.locations() + k]
    }
}

/// `C x d` matrix of per-class linear classifiers; row `i` is class `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierWeights {
    rows: Tensor,
}

impl ClassifierWeights {
    pub fn new(rows: Tensor) -> Result<Self> {
        if rows.rank() != 2 {
            return Err(Error::ShapeMismatch {
                op: "ClassifierWeights::new",
                left: rows.dims().to_vec(),
                right: vec![],
            });
        }
        Ok(Self { rows })
    }

    pub fn classes(&self) -> usize {
        self.rows.dims()[0]
    }

    pub fn channels(&self) -> usize {
        self.rows.dims()[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.rows
    }
}

/// `C x n` raw classification scores: `scores[i,k] = x_k . m_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTensor {
    scores: Tensor,
}

impl ScoreTensor {
    /// Wraps a rank-2 `[classes, locations]` tensor of raw scores.
    pub fn new(scores: Tensor) -> Result<Self> {
        if scores.rank() != 2 {
            return Err(Error::ShapeMismatch {
                op: "ScoreTensor::new",
                left: scores.dims().to_vec(),
                right: vec![],
            });
        }
        Ok(Self { scores })
    }

    pub fn classes(&self) -> usize {
        self.scores.dims()[0]
    }

    pub fn locations(&self) -> usize {
        self.scores.dims()[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.scores.row(i)
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.scores
    }
}

/// `C x n` spatial attention; each row is a probability vector over locations.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    probs: Tensor,
}

impl AttentionMap {
    pub fn classes(&self) -> usize {
        self.probs.dims()[0]
    }

    pub fn locations(&self) -> usize {
        self.probs.dims()[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.probs.row(i)
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.probs
    }
}

/// Backbone family for the fixed-lambda rescoring policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Resnet,
    Other,
}

impl ModelFamily {
    /// Fixed rescoring lambda: 0.02 for ResNet-family models, 0.2 otherwise.
    pub fn default_lambda(self) -> f64 {
        match self {
            ModelFamily::Resnet => 0.02,
            ModelFamily::Other => 0.2,
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "resnet" => Ok(ModelFamily::Resnet),
            "other" => Ok(ModelFamily::Other),
            _ => Err(Error::InvalidParameter {
                message: format!("unknown model family {s:?} (expected resnet or other)"),
            }),
        }
    }
}

fn check_channels(x: &FeatureTensor, w: &ClassifierWeights, op: &'static str) -> Result<()> {
    if x.channels() != w.channels() {
        return Err(Error::ShapeMismatch {
            op,
            left: x.as_tensor().dims().to_vec(),
            right: w.as_tensor().dims().to_vec(),
        });
    }
    Ok(())
}

fn check_class(i: usize, classes: usize) -> Result<()> {
    if i >= classes {
        return Err(Error::IndexOutOfRange {
            what: "class",
            index: i,
            len: classes,
        });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParameter {
            message: format!("lambda must be finite and >= 0, got {lambda}"),
        });
    }
    Ok(())
}

/// Per-location classification scores `scores[i,k] = x_k . m_i`.
///
/// The channel sum runs left to right, so the result matches a naive
/// dot-product loop bit for bit.
pub fn raw_scores(x: &FeatureTensor, w: &ClassifierWeights) -> Result<ScoreTensor> {
    check_channels(x, w, "raw_scores")?;
    let (classes, n, d) = (w.classes(), x.locations(), x.channels());
    let mut data = vec![0.0; classes * n];
    for i in 0..classes {
        let m_i = w.row(i);
        for k in 0..n {
            let mut acc = 0.0;
            for (c, &m) in m_i.iter().enumerate().take(d) {
                acc += x.value(c, k) * m;
            }
            data[i * n + k] = acc;
        }
    }
    Ok(ScoreTensor {
        scores: Tensor::from_parts(vec![classes, n], data),
    })
}

/// Row-wise temperature softmax of a score tensor.
pub fn attention_scores(s: &ScoreTensor, t: Temperature) -> AttentionMap {
    let (classes, n) = (s.classes(), s.locations());
    let mut data = vec![0.0; classes * n];
    for i in 0..classes {
        tensor::softmax_slice(s.row(i), t, &mut data[i * n..(i + 1) * n]);
    }
    AttentionMap {
        probs: Tensor::from_parts(vec![classes, n], data),
    }
}

/// Attention-weighted class feature `a^i = sum_k s^i_k x_k`.
pub fn class_feature(x: &FeatureTensor, a: &AttentionMap, class: usize) -> Result<Vec<f64>> {
    check_class(class, a.classes())?;
    if a.locations() != x.locations() {
        return Err(Error::ShapeMismatch {
            op: "class_feature",
            left: x.as_tensor().dims().to_vec(),
            right: a.as_tensor().dims().to_vec(),
        });
    }
    let weights = a.row(class);
    let d = x.channels();
    let mut out = vec![0.0; d];
    for (k, &s_k) in weights.iter().enumerate() {
        for (c, o) in out.iter_mut().enumerate() {
            *o += s_k * x.value(c, k);
        }
    }
    Ok(out)
}

/// Global average feature `g = (1/n) sum_k x_k`.
pub fn global_feature(x: &FeatureTensor) -> Vec<f64> {
    let (d, n) = (x.channels(), x.locations());
    let mut out = vec![0.0; d];
    for (c, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..n {
            acc += x.value(c, k);
        }
        *o = acc / n as f64;
    }
    out
}

/// Residual fusion `f^i = g + lambda * a^i`.
pub fn csra_feature(g: &[f64], a_i: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if g.len() != a_i.len() {
        return Err(Error::ShapeMismatch {
            op: "csra_feature",
            left: vec![g.len()],
            right: vec![a_i.len()],
        });
    }
    Ok(g.iter().zip(a_i).map(|(gv, av)| gv + lambda * av).collect())
}

/// Mean plus attention-weighted score for one score row; the score-path logit
/// before the class loop. With `lambda == 0` this returns the plain mean
/// bitwise, so the average-pooling baseline is an exact special case.
pub(crate) fn score_row_logit(row: &[f64], t: Temperature, lambda: f64) -> f64 {
    let avg = tensor::mean_slice(row);
    if lambda == 0.0 {
        return avg;
    }
    let att = match t {
        Temperature::Infinite => tensor::max_slice(row),
        Temperature::Finite(_) => {
            let mut probs = vec![0.0; row.len()];
            tensor::softmax_slice(row, t, &mut probs);
            tensor::dot(&probs, row)
        }
    };
    avg + lambda * att
}

/// CSRA logits via the score path (production route).
///
/// `y^i = mean_k scores[i,k] + lambda * sum_k softmax_T(scores[i,.])_k scores[i,k]`,
/// with the second term replaced by `max_k scores[i,k]` at `T = Infinite`.
pub fn csra_logits(
    x: &FeatureTensor,
    w: &ClassifierWeights,
    t: Temperature,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let scores = raw_scores(x, w)?;
    Ok((0..scores.classes())
        .map(|i| score_row_logit(scores.row(i), t, lambda))
        .collect())
}

/// CSRA logits via the feature path: materializes `a^i`, fuses with `g`, and
/// applies the classifier. Agrees with [`csra_logits`] to within rounding;
/// kept as a permanent cross-check of the derivation.
pub fn csra_logits_via_features(
    x: &FeatureTensor,
    w: &ClassifierWeights,
    t: Temperature,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let scores = raw_scores(x, w)?;
    let attention = attention_scores(&scores, t);
    let g = global_feature(x);
    let mut out = vec![0.0; w.classes()];
    for (i, o) in out.iter_mut().enumerate() {
        let a_i = class_feature(x, &attention, i)?;
        let f_i = csra_feature(&g, &a_i, lambda)?;
        *o = tensor::dot(w.row(i), &f_i);
    }
    Ok(out)
}

/// The max-pooling limit of the CSRA logit: `mean + lambda * max` per class.
///
/// This is both the `T -> Infinite` special case and the training-free
/// rescoring trick applied to a pretrained model's score tensor.
pub fn max_limit_logits(s: &ScoreTensor, lambda: f64) -> Vec<f64> {
    (0..s.classes())
        .map(|i| {
            let row = s.row(i);
            let avg = tensor::mean_slice(row);
            if lambda == 0.0 {
                avg
            } else {
                avg + lambda * tensor::max_slice(row)
            }
        })
        .collect()
}

/// Normalized per-location fusion weights `(1/n + lambda * s^i_k) / (1 + lambda)`.
///
/// These weights sum to 1 and express `f^i` (up to the `1 + lambda` scale) as a
/// single weighted combination of locations: a uniform prior mixed with the
/// class-specific attention.
pub fn fused_weights(a: &AttentionMap, lambda: f64, class: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_class(class, a.classes())?;
    let n = a.locations() as f64;
    Ok(a.row(class)
        .iter()
        .map(|&s_k| (1.0 / n + lambda * s_k) / (1.0 + lambda))
        .collect())
}
