//! Classification metrics against the GRAD (positive) label: precision,
//! recall, F1, and precision-at-recall-threshold for both fixed operating
//! points and score-producing classifiers.

use serde::{Deserialize, Serialize};

use crate::dataset::Label;

/// Confusion counts with GRAD as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Tallies one (predicted, truth) pair.
    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Grad, Label::Grad) => self.tp += 1,
            (Label::Grad, Label::NonGrad) => self.fp += 1,
            (Label::NonGrad, Label::Grad) => self.fn_ += 1,
            (Label::NonGrad, Label::NonGrad) => self.tn += 1,
            // Unlabeled truths are never evaluated; callers filter them out.
            _ => {}
        }
    }

    pub fn precision(&self) -> Metric {
        ratio_percent(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Metric {
        ratio_percent(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> Metric {
        f1_from_percent(self.precision(), self.recall())
    }
}

/// A percentage in [0, 100]. `degenerate` marks values defined as 0 because
/// the denominator was empty, so report renderers can footnote them instead
/// of aborting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub percent: f64,
    pub degenerate: bool,
}

impl Metric {
    pub fn exact(percent: f64) -> Self {
        Metric { percent, degenerate: false }
    }

    pub fn degenerate() -> Self {
        Metric { percent: 0.0, degenerate: true }
    }

    /// Rounded to one decimal, the reporting convention for all percentages.
    pub fn rounded(&self) -> f64 {
        (self.percent * 10.0).round() / 10.0
    }
}

fn ratio_percent(num: u64, denom: u64) -> Metric {
    if denom == 0 {
        Metric::degenerate()
    } else {
        Metric::exact(100.0 * num as f64 / denom as f64)
    }
}

fn f1_from_percent(p: Metric, r: Metric) -> Metric {
    if p.degenerate || r.degenerate || p.percent + r.percent == 0.0 {
        Metric::degenerate()
    } else {
        Metric::exact(2.0 * p.percent * r.percent / (p.percent + r.percent))
    }
}

/// F1 (harmonic mean) of precision/recall given as percentages.
pub fn f1_percent(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// The paper's single-operating-point rule: report the precision if recall
/// meets the threshold, otherwise report 0.
pub fn precision_at_recall_point(precision: f64, recall: f64, threshold: f64) -> f64 {
    if recall >= threshold {
        precision
    } else {
        0.0
    }
}

/// Same rule applied to confusion counts. Degenerate precision/recall count
/// as failing the threshold.
pub fn point_precision_at_recall(c: &ConfusionCounts, threshold: f64) -> f64 {
    let p = c.precision();
    let r = c.recall();
    if p.degenerate || r.degenerate {
        return 0.0;
    }
    precision_at_recall_point(p.percent, r.percent, threshold)
}

/// One scored example for threshold sweeps. Higher scores mean more
/// GRAD-like.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPrediction {
    pub score: f64,
    pub truth: Label,
}

impl ScoredPrediction {
    pub fn new(score: f64, truth: Label) -> Self {
        ScoredPrediction { score, truth }
    }
}

/// Best operating point found by [`sweep_precision_at_recall`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub best_precision: f64,
    pub chosen_cutoff: f64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no positive (GRAD) examples to sweep over")]
    NoPositives,
    #[error("score is not finite")]
    NonFiniteScore,
}

/// Sweeps decision cutoffs over the observed score values (predict GRAD iff
/// score >= cutoff) and returns the best precision among operating points
/// with recall >= threshold. `None` means the recall threshold is
/// unreachable, which reports map to 0.
///
/// Cutoffs are taken only at observed scores, so tied scores move together.
pub fn sweep_precision_at_recall(
    preds: &[ScoredPrediction],
    threshold: f64,
) -> Result<Option<SweepResult>, MetricsError> {
    if preds.iter().any(|p| !p.score.is_finite()) {
        return Err(MetricsError::NonFiniteScore);
    }
    let positives = preds.iter().filter(|p| p.truth == Label::Grad).count() as u64;
    if positives == 0 {
        return Err(MetricsError::NoPositives);
    }

    // Descending by score; a cutoff at index i predicts GRAD for all
    // examples scoring >= that value.
    let mut sorted: Vec<&ScoredPrediction> = preds.iter().collect();
    sorted.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));

    let mut best: Option<SweepResult> = None;
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let cutoff = sorted[i].score;
        // Consume the whole tie group: equal scores cannot be split.
        while i < sorted.len() && sorted[i].score == cutoff {
            if sorted[i].truth == Label::Grad {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = 100.0 * tp as f64 / positives as f64;
        if recall >= threshold {
            let precision = 100.0 * tp as f64 / (tp + fp) as f64;
            let better = match best {
                Some(b) => precision > b.best_precision,
                None => true,
            };
            if better {
                best = Some(SweepResult { best_precision: precision, chosen_cutoff: cutoff });
            }
        }
    }
    Ok(best)
}


#[cfg(test)]
mod prop_tests {
    use super::tests::sweep_oracle;
    use super::*;
    use proptest::prelude::*;

    fn pred_strategy() -> impl Strategy<Value = ScoredPrediction> {
        // Coarse score grid so ties actually occur.
        (-20i32..20, prop::bool::ANY).prop_map(|(s, grad)| ScoredPrediction {
            score: s as f64 / 4.0,
            truth: if grad { Label::Grad } else { Label::NonGrad },
        })
    }

    proptest! {
        #[test]
        fn sweep_agrees_with_brute_force(
            mut preds in prop::collection::vec(pred_strategy(), 1..50),
            threshold in 1.0f64..100.0,
        ) {
            // Guarantee at least one positive.
            preds.push(ScoredPrediction::new(0.0, Label::Grad));
            let fast = sweep_precision_at_recall(&preds, threshold).unwrap();
            let slow = sweep_oracle(&preds, threshold);
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn sweep_dominates_every_feasible_cutoff(
            mut preds in prop::collection::vec(pred_strategy(), 1..50),
            threshold in 1.0f64..100.0,
        ) {
            preds.push(ScoredPrediction::new(0.0, Label::Grad));
            let best = sweep_precision_at_recall(&preds, threshold).unwrap();
            let positives = preds.iter().filter(|p| p.truth == Label::Grad).count() as f64;
            for cand in &preds {
                let cutoff = cand.score;
                let tp = preds.iter()
                    .filter(|p| p.score >= cutoff && p.truth == Label::Grad)
                    .count() as f64;
                let predicted = preds.iter().filter(|p| p.score >= cutoff).count() as f64;
                let recall = 100.0 * tp / positives;
                if recall >= threshold {
                    let precision = 100.0 * tp / predicted;
                    let best_p = best.expect("feasible cutoff exists").best_precision;
                    prop_assert!(best_p >= precision - 1e-12);
                }
            }
        }
    }
}
