//! Multi-label evaluation: per-class average precision and mAP, plus the
//! macro (per-category CP/CR/CF1) and micro (overall OP/OR/OF1) blocks in
//! "all" and "top-3" variants with positive threshold 0.5.
//!
//! Ignore labels are excluded from every metric. Score ties are broken by the
//! original index (for ranking) or the class index (for top-k), so results
//! are reproducible.

use crate::error::{Error, Result};
use crate::label::Label;

/// An `N x C` block of confidence scores with ternary labels.
///
/// Thresholded metrics expect post-sigmoid probabilities; average precision
/// only uses the score ordering, so any monotone scores work there.
#[derive(Debug, Clone)]
pub struct EvalSet {
    samples: usize,
    classes: usize,
    scores: Vec<f64>,
    labels: Vec<Label>,
}

impl EvalSet {
    pub fn new(samples: usize, classes: usize, scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if samples == 0 || classes == 0 {
            return Err(Error::InvalidParameter {
                message: "evaluation set must have at least one sample and one class".to_string(),
            });
        }
        if scores.len() != samples * classes || labels.len() != samples * classes {
            return Err(Error::ShapeMismatch {
                op: "EvalSet::new",
                left: vec![samples, classes],
                right: vec![scores.len(), labels.len()],
            });
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter {
                message: format!("scores must be finite, found {bad}"),
            });
        }
        Ok(Self {
            samples,
            classes,
            scores,
            labels,
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn score(&self, sample: usize, class: usize) -> f64 {
        self.scores[sample * self.classes + class]
    }

    pub fn label(&self, sample: usize, class: usize) -> Label {
        self.labels[sample * self.classes + class]
    }
}

/// Average-precision definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApVariant {
    /// Mean of precision at every positive rank (the common multi-label mAP).
    AllPoints,
    /// VOC-style 11-point interpolation, kept for comparison.
    ElevenPoint,
}

/// Average precision of one class.
///
/// Entries with `Label::Ignore` are dropped first. Returns `None` when no
/// positive survives (AP is undefined for that class); callers decide how to
/// aggregate.
pub fn average_precision(scores: &[f64], labels: &[Label]) -> Result<Option<f64>> {
    average_precision_with(scores, labels, ApVariant::AllPoints)
}

pub fn average_precision_with(
    scores: &[f64],
    labels: &[Label],
    variant: ApVariant,
) -> Result<Option<f64>> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            op: "average_precision",
            left: vec![scores.len()],
            right: vec![labels.len()],
        });
    }
    // Drop ignored entries, keep original indices for the tie rule.
    let mut order: Vec<(usize, f64, bool)> = scores
        .iter()
        .zip(labels)
        .enumerate()
        .filter(|(_, (_, l))| !l.is_ignore())
        .map(|(i, (&s, &l))| (i, s, l == Label::Positive))
        .collect();
    let positives = order.iter().filter(|(_, _, p)| *p).count();
    if positives == 0 {
        return Ok(None);
    }
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    match variant {
        ApVariant::AllPoints => {
            let mut hits = 0usize;
            let mut sum = 0.0;
            for (rank0, (_, _, positive)) in order.iter().enumerate() {
                if *positive {
                    hits += 1;
                    sum += hits as f64 / (rank0 + 1) as f64;
                }
            }
            Ok(Some(sum / positives as f64))
        }
        ApVariant::ElevenPoint => {
            // Precision/recall at every rank, then max precision at recall >= t.
            let mut hits = 0usize;
            let mut points = Vec::with_capacity(order.len());
            for (rank0, (_, _, positive)) in order.iter().enumerate() {
                if *positive {
                    hits += 1;
                }
                points.push((
                    hits as f64 / positives as f64,
                    hits as f64 / (rank0 + 1) as f64,
                ));
            }
            let mut sum = 0.0;
            for step in 0..=10 {
                let t = step as f64 / 10.0;
                let best = points
                    .iter()
                    .filter(|(recall, _)| *recall >= t)
                    .map(|(_, precision)| *precision)
                    .fold(0.0, f64::max);
                sum += best;
            }
            Ok(Some(sum / 11.0))
        }
    }
}

/// How the top-k restriction combines with the score threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopKRule {
    /// Predict only classes that pass the threshold AND sit in the sample's
    /// top k (the dominant convention; the default).
    ThresholdAndRank,
    /// Predict exactly the top-k classes regardless of the threshold.
    RankOnly,
}

/// The six precision/recall/F1 aggregates of one evaluation block.
///
/// `per_class_*` are macro averages over classes (empty denominators
/// contribute 0 and are counted below); `overall_*` are micro aggregates over
/// all (sample, class) pairs. Both F1 values come from the aggregated
/// precision and recall, with 0 when precision + recall is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PrfAggregates {
    pub per_class_precision: f64,
    pub per_class_recall: f64,
    pub per_class_f1: f64,
    pub overall_precision: f64,
    pub overall_recall: f64,
    pub overall_f1: f64,
    /// Classes that predicted nothing (their precision counted as 0).
    pub classes_without_predictions: usize,
    /// Classes with no positive labels (their recall counted as 0).
    pub classes_without_positives: usize,
    /// Set when not a single prediction was made (overall precision is 0 by
    /// definition then).
    pub no_predictions: bool,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Top-k class indices of one sample: score descending, class index ascending
/// on ties.
fn top_k_classes(e: &EvalSet, sample: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..e.classes()).collect();
    order.sort_by(|&a, &b| {
        e.score(sample, b)
            .total_cmp(&e.score(sample, a))
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Thresholded precision/recall/F1 with the default threshold-and-rank top-k
/// rule.
pub fn thresholded_prf(e: &EvalSet, threshold: f64, topk: Option<usize>) -> PrfAggregates {
    thresholded_prf_with_rule(e, threshold, topk, TopKRule::ThresholdAndRank)
}

pub fn thresholded_prf_with_rule(
    e: &EvalSet,
    threshold: f64,
    topk: Option<usize>,
    rule: TopKRule,
) -> PrfAggregates {
    let classes = e.classes();
    let mut tp = vec![0u64; classes];
    let mut fp = vec![0u64; classes];
    let mut fn_ = vec![0u64; classes];

    for s in 0..e.samples() {
        let ranked: Option<Vec<usize>> = topk.map(|k| top_k_classes(e, s, k));
        for c in 0..classes {
            let label = e.label(s, c);
            if label.is_ignore() {
                continue;
            }
            let passes_threshold = e.score(s, c) >= threshold;
            let in_top = ranked.as_ref().is_none_or(|r| r.contains(&c));
            let predicted = match (topk, rule) {
                (None, _) => passes_threshold,
                (Some(_), TopKRule::ThresholdAndRank) => passes_threshold && in_top,
                (Some(_), TopKRule::RankOnly) => in_top,
            };
            let actual = label == Label::Positive;
            match (predicted, actual) {
                (true, true) => tp[c] += 1,
                (true, false) => fp[c] += 1,
                (false, true) => fn_[c] += 1,
                (false, false) => {}
            }
        }
    }

    let mut cp_sum = 0.0;
    let mut cr_sum = 0.0;
    let mut classes_without_predictions = 0;
    let mut classes_without_positives = 0;
    for c in 0..classes {
        let predicted = tp[c] + fp[c];
        if predicted == 0 {
            classes_without_predictions += 1;
        } else {
            cp_sum += tp[c] as f64 / predicted as f64;
        }
        let actual = tp[c] + fn_[c];
        if actual == 0 {
            classes_without_positives += 1;
        } else {
            cr_sum += tp[c] as f64 / actual as f64;
        }
    }
    let cp = cp_sum / classes as f64;
    let cr = cr_sum / classes as f64;

    let total_tp: u64 = tp.iter().sum();
    let total_fp: u64 = fp.iter().sum();
    let total_fn: u64 = fn_.iter().sum();
    let no_predictions = total_tp + total_fp == 0;
    let op = if no_predictions {
        0.0
    } else {
        total_tp as f64 / (total_tp + total_fp) as f64
    };
    let or = if total_tp + total_fn == 0 {
        0.0
    } else {
        total_tp as f64 / (total_tp + total_fn) as f64
    };

    PrfAggregates {
        per_class_precision: cp,
        per_class_recall: cr,
        per_class_f1: f1(cp, cr),
        overall_precision: op,
        overall_recall: or,
        overall_f1: f1(op, or),
        classes_without_predictions,
        classes_without_positives,
        no_predictions,
    }
}

/// mAP over the classes where AP is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub map: f64,
    pub per_class: Vec<Option<f64>>,
    /// Classes skipped because they have no positives.
    pub undefined_classes: usize,
}

pub fn mean_average_precision(e: &EvalSet) -> Result<MapResult> {
    mean_average_precision_with(e, ApVariant::AllPoints)
}

pub fn mean_average_precision_with(e: &EvalSet, variant: ApVariant) -> Result<MapResult> {
    let mut per_class = Vec::with_capacity(e.classes());
    let mut sum = 0.0;
    let mut defined = 0usize;
    for c in 0..e.classes() {
        let scores: Vec<f64> = (0..e.samples()).map(|s| e.score(s, c)).collect();
        let labels: Vec<Label> = (0..e.samples()).map(|s| e.label(s, c)).collect();
        let ap = average_precision_with(&scores, &labels, variant)?;
        if let Some(v) = ap {
            sum += v;
            defined += 1;
        }
        per_class.push(ap);
    }
    if defined == 0 {
        return Err(Error::InvalidParameter {
            message: "mAP undefined: no class has a positive label".to_string(),
        });
    }
    Ok(MapResult {
        map: sum / defined as f64,
        per_class,
        undefined_classes: e.classes() - defined,
    })
}

/// Full evaluation: mAP plus both six-metric blocks.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub map: f64,
    pub per_class_ap: Vec<Option<f64>>,
    /// Classes excluded from mAP for lack of positives.
    pub undefined_ap_classes: usize,
    pub all: PrfAggregates,
    pub top3: PrfAggregates,
}

/// Evaluates with the standard positive threshold 0.5.
pub fn evaluate(e: &EvalSet) -> Result<MetricsReport> {
    evaluate_with_threshold(e, 0.5)
}

pub fn evaluate_with_threshold(e: &EvalSet, threshold: f64) -> Result<MetricsReport> {
    let map = mean_average_precision(e)?;
    Ok(MetricsReport {
        map: map.map,
        per_class_ap: map.per_class,
        undefined_ap_classes: map.undefined_classes,
        all: thresholded_prf(e, threshold, None),
        top3: thresholded_prf(e, threshold, Some(3)),
    })
}
