//! Metrics vs exhaustive brute-force oracles, compared exactly.
//!
//! The oracles avoid sorting entirely: ranks and top-k membership come from
//! pairwise comparisons, and confusion counts from direct enumeration. Shared
//! conventions (tie rules, reduction order, aggregate formulas) are part of
//! the metric definitions, so integer counts agree and the derived floats
//! must match bit for bit.

use csra_core::label::Label;
use csra_core::metrics::{
    average_precision, evaluate, mean_average_precision, thresholded_prf, EvalSet, PrfAggregates,
};
use rand::Rng;

use crate::support;

/// Brute-force AP: rank every kept entry by pairwise counting, then average
/// precision over positive ranks (ascending rank order, like the metric).
fn oracle_ap(scores: &[f64], labels: &[Label]) -> Option<f64> {
    let kept: Vec<(usize, f64, bool)> = scores
        .iter()
        .zip(labels)
        .enumerate()
        .filter(|(_, (_, l))| !l.is_ignore())
        .map(|(i, (&s, &l))| (i, s, l == Label::Positive))
        .collect();
    let positives = kept.iter().filter(|(_, _, p)| *p).count();
    if positives == 0 {
        return None;
    }
    let ranks_before = |idx: usize, score: f64| {
        kept.iter()
            .filter(|&&(j, s, _)| s > score || (s == score && j < idx))
            .count()
    };
    let mut at_rank: Vec<(usize, f64)> = Vec::new();
    for &(idx, score, positive) in &kept {
        if !positive {
            continue;
        }
        let rank = ranks_before(idx, score) + 1;
        let hits = kept
            .iter()
            .filter(|&&(j, s, p)| p && (s > score || (s == score && j <= idx)))
            .count();
        at_rank.push((rank, hits as f64 / rank as f64));
    }
    at_rank.sort_by_key(|&(rank, _)| rank);
    let mut sum = 0.0;
    for &(_, precision) in &at_rank {
        sum += precision;
    }
    Some(sum / positives as f64)
}

/// Brute-force confusion counting with pairwise top-k membership.
fn oracle_prf(e: &EvalSet, threshold: f64, topk: Option<usize>) -> PrfAggregates {
    let classes = e.classes();
    let mut tp = vec![0u64; classes];
    let mut fp = vec![0u64; classes];
    let mut fn_ = vec![0u64; classes];
    for s in 0..e.samples() {
        for c in 0..classes {
            let label = e.label(s, c);
            if label.is_ignore() {
                continue;
            }
            let in_top = match topk {
                None => true,
                Some(k) => {
                    let better = (0..classes)
                        .filter(|&o| {
                            e.score(s, o) > e.score(s, c)
                                || (e.score(s, o) == e.score(s, c) && o < c)
                        })
                        .count();
                    better < k
                }
            };
            let predicted = e.score(s, c) >= threshold && in_top;
            match (predicted, label == Label::Positive) {
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
        if tp[c] + fp[c] == 0 {
            classes_without_predictions += 1;
        } else {
            cp_sum += tp[c] as f64 / (tp[c] + fp[c]) as f64;
        }
        if tp[c] + fn_[c] == 0 {
            classes_without_positives += 1;
        } else {
            cr_sum += tp[c] as f64 / (tp[c] + fn_[c]) as f64;
        }
    }
    let cp = cp_sum / classes as f64;
    let cr = cr_sum / classes as f64;
    let (ttp, tfp, tfn) = (
        tp.iter().sum::<u64>(),
        fp.iter().sum::<u64>(),
        fn_.iter().sum::<u64>(),
    );
    let no_predictions = ttp + tfp == 0;
    let op = if no_predictions { 0.0 } else { ttp as f64 / (ttp + tfp) as f64 };
    let or = if ttp + tfn == 0 { 0.0 } else { ttp as f64 / (ttp + tfn) as f64 };
    let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
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

fn oracle_map(e: &EvalSet) -> Option<(f64, usize)> {
    let mut sum = 0.0;
    let mut defined = 0usize;
    for c in 0..e.classes() {
        let scores: Vec<f64> = (0..e.samples()).map(|s| e.score(s, c)).collect();
        let labels: Vec<Label> = (0..e.samples()).map(|s| e.label(s, c)).collect();
        if let Some(ap) = oracle_ap(&scores, &labels) {
            sum += ap;
            defined += 1;
        }
    }
    if defined == 0 {
        None
    } else {
        Some((sum / defined as f64, e.classes() - defined))
    }
}

fn random_eval_set(rng: &mut rand_chacha::ChaCha8Rng) -> EvalSet {
    let samples = rng.random_range(1..=10);
    let classes = rng.random_range(1..=5);
    // Coarse score grid to provoke plenty of exact ties.
    let scores: Vec<f64> = (0..samples * classes)
        .map(|_| rng.random_range(0..=10) as f64 / 10.0)
        .collect();
    let labels: Vec<Label> = (0..samples * classes)
        .map(|_| match rng.random_range(0..10) {
            0 => Label::Ignore,
            v if v < 5 => Label::Positive,
            _ => Label::Negative,
        })
        .collect();
    EvalSet::new(samples, classes, scores, labels).unwrap()
}

fn assert_block_exact(got: &PrfAggregates, want: &PrfAggregates, context: &str) {
    for (name, g, w) in [
        ("CP", got.per_class_precision, want.per_class_precision),
        ("CR", got.per_class_recall, want.per_class_recall),
        ("CF1", got.per_class_f1, want.per_class_f1),
        ("OP", got.overall_precision, want.overall_precision),
        ("OR", got.overall_recall, want.overall_recall),
        ("OF1", got.overall_f1, want.overall_f1),
    ] {
        assert_eq!(g.to_bits(), w.to_bits(), "{context}: {name} {g} != oracle {w}");
    }
    assert_eq!(got.classes_without_predictions, want.classes_without_predictions);
    assert_eq!(got.classes_without_positives, want.classes_without_positives);
    assert_eq!(got.no_predictions, want.no_predictions);
}

#[test]
fn metrics_match_brute_force_oracles_exactly() {
    let mut rng = support::rng(0xC5A5);
    let mut evaluated = 0usize;
    for case in 0..200 {
        let e = random_eval_set(&mut rng);

        // Per-class AP.
        for c in 0..e.classes() {
            let scores: Vec<f64> = (0..e.samples()).map(|s| e.score(s, c)).collect();
            let labels: Vec<Label> = (0..e.samples()).map(|s| e.label(s, c)).collect();
            let got = average_precision(&scores, &labels).unwrap();
            let want = oracle_ap(&scores, &labels);
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(w)) => {
                    assert_eq!(g.to_bits(), w.to_bits(), "case {case} class {c}: AP {g} != {w}`")
                }
                other => panic!("case {case} class {c}: definedness mismatch {other:?}"),
            }
        }

        // Thresholded blocks, all and top-3.
        for topk in [None, Some(3)] {
            let got = thresholded_prf(&e, 0.5, topk);
            let want = oracle_prf(&e, 0.5, topk);
            assert_block_exact(&got, &want, &format!("case {case} topk {topk:?}"));
        }

        // Full report when mAP is defined.
        match (evaluate(&e), oracle_map(&e)) {
            (Ok(report), Some((map, skipped))) => {
                assert_eq!(report.map.to_bits(), map.to_bits(), "case {case}: mAP");
                assert_eq!(report.undefined_ap_classes, skipped);
                let direct = mean_average_precision(&e).unwrap();
                assert_eq!(report.map.to_bits(), direct.map.to_bits());
                evaluated += 1;
            }
            (Err(_), None) => {}
            other => panic!("case {case}: mAP definedness mismatch ({other:?})"),
        }
    }
    support::pass(
        "metrics-oracle",
        &format!("200 random evaluation sets, {evaluated} with defined mAP, all fields exact"),
    );
}
