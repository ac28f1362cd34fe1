//! Multi-head attention: `H` parallel classifier branches with a fixed
//! increasing temperature schedule (the last head at `T = inf` when `H > 1`),
//! a shared lambda, and logit-sum fusion.

use crate::attention::{self, ClassifierWeights, FeatureTensor};
use crate::error::{Error, Result};
use crate::tensor::{self, Temperature, Tensor};

/// Head counts with a schedule given verbatim by the method; other counts use
/// the generic `(1, 2, ..., H-1, inf)` rule and are flagged non-canonical.
pub const CANONICAL_HEAD_COUNTS: [usize; 5] = [1, 2, 4, 6, 8];

/// Whether `heads` is one of the evaluated head counts.
pub fn is_canonical_head_count(heads: usize) -> bool {
    CANONICAL_HEAD_COUNTS.contains(&heads)
}

/// Fixed temperature schedule for `heads` attention branches.
///
/// `H=1 -> (1)`, `H=2 -> (1, inf)`, `H=4 -> (1, 2, 4, inf)`,
/// `H=6 -> (1..5, inf)`, `H=8 -> (1..7, inf)`. Any other positive `H` gets
/// `(1, 2, ..., H-1, inf)`; callers can detect the non-canonical case with
/// [`is_canonical_head_count`].
pub fn default_schedule(heads: usize) -> Result<Vec<Temperature>> {
    if heads == 0 {
        return Err(Error::InvalidParameter {
            message: "head count must be >= 1".to_string(),
        });
    }
    if heads == 1 {
        return Ok(vec![Temperature::Finite(1.0)]);
    }
    let mut temps: Vec<Temperature> = match heads {
        4 => vec![1.0, 2.0, 4.0].into_iter().map(Temperature::Finite).collect(),
        h => (1..h).map(|t| Temperature::Finite(t as f64)).collect(),
    };
    temps.push(Temperature::Infinite);
    Ok(temps)
}

/// Head count, shared lambda, per-head temperatures, and the normalization flag.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadConfig {
    heads: usize,
    lambda: f64,
    temperatures: Vec<Temperature>,
    normalize: bool,
}

impl HeadConfig {
    /// Validates an explicit configuration (`temperatures.len() == heads`,
    /// `lambda >= 0`).
    pub fn new(
        heads: usize,
        lambda: f64,
        temperatures: Vec<Temperature>,
        normalize: bool,
    ) -> Result<Self> {
        if heads == 0 {
            return Err(Error::InvalidParameter {
                message: "head count must be >= 1".to_string(),
            });
        }
        if temperatures.len() != heads {
            return Err(Error::InvalidParameter {
                message: format!(
                    "expected {heads} temperatures, got {}",
                    temperatures.len()
                ),
            });
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidParameter {
                message: format!("lambda must be finite and >= 0, got {lambda}"),
            });
        }
        Ok(Self {
            heads,
            lambda,
            temperatures,
            normalize,
        })
    }

    /// Configuration with the fixed default temperature schedule.
    pub fn with_default_schedule(heads: usize, lambda: f64, normalize: bool) -> Result<Self> {
        let temperatures = default_schedule(heads)?;
        Self::new(heads, lambda, temperatures, normalize)
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn temperatures(&self) -> &[Temperature] {
        &self.temperatures
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn is_canonical(&self) -> bool {
        is_canonical_head_count(self.heads)
    }
}

/// A trained (or freshly initialized) multi-head CSRA model: one independent
/// classifier per head, all `C x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadModel {
    config: HeadConfig,
    heads: Vec<ClassifierWeights>,
}

impl MultiHeadModel {
    /// Validates head count and shared `C x d` shape; when the config carries
    /// the normalize flag, every row must already have unit norm (within 1e-9).
    pub fn new(config: HeadConfig, heads: Vec<ClassifierWeights>) -> Result<Self> {
        if heads.len() != config.heads() {
            return Err(Error::InvalidParameter {
                message: format!(
                    "config declares {} heads but {} classifier blocks given",
                    config.heads(),
                    heads.len()
                ),
            });
        }
        let (classes, channels) = (heads[0].classes(), heads[0].channels());
        for h in &heads[1..] {
            if h.classes() != classes || h.channels() != channels {
                return Err(Error::ShapeMismatch {
                    op: "MultiHeadModel::new",
                    left: vec![classes, channels],
                    right: h.as_tensor().dims().to_vec(),
                });
            }
        }
        if config.normalize() {
            for (hi, h) in heads.iter().enumerate() {
                for i in 0..h.classes() {
                    let norm = l2_norm(h.row(i));
                    if (norm - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidParameter {
                            message: format!(
                                "normalize flag set but head {hi} row {i} has norm {norm}"
                            ),
                        });
                    }
                }
            }
        }
        Ok(Self { config, heads })
    }

    pub fn config(&self) -> &HeadConfig {
        &self.config
    }

    pub fn head(&self, h: usize) -> &ClassifierWeights {
        &self.heads[h]
    }

    pub fn heads(&self) -> &[ClassifierWeights] {
        &self.heads
    }

    pub fn classes(&self) -> usize {
        self.heads[0].classes()
    }

    pub fn channels(&self) -> usize {
        self.heads[0].channels()
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    tensor::dot(v, v).sqrt()
}

/// Rescales every classifier row to unit L2 norm.
///
/// A row with norm below 1e-12 cannot be normalized and is rejected rather
/// than silently turned into NaN.
pub fn normalize_rows(w: &ClassifierWeights) -> Result<ClassifierWeights> {
    let (classes, channels) = (w.classes(), w.channels());
    let mut data = Vec::with_capacity(classes * channels);
    for i in 0..classes {
        let row = w.row(i);
        let norm = l2_norm(row);
        if norm < 1e-12 {
            return Err(Error::DegenerateClassifier { row: i, norm });
        }
        data.extend(row.iter().map(|&v| v / norm));
    }
    ClassifierWeights::new(Tensor::from_parts(vec![classes, channels], data))
}

/// Fused logits: the sum over heads of each head's CSRA logits, in head order.
pub fn multihead_logits(x: &FeatureTensor, model: &MultiHeadModel) -> Result<Vec<f64>> {
    let lambda = model.config().lambda();
    let mut out = vec![0.0; model.classes()];
    for (head, &t) in model.heads().iter().zip(model.config().temperatures()) {
        let y = attention::csra_logits(x, head, t, lambda)?;
        for (o, v) in out.iter_mut().zip(&y) {
            *o += v;
        }
    }
    Ok(out)
}
