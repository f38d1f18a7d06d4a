use serde::Serialize;

use crate::activity::Label;

/// Confusion counts with `Lowering` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Self {
        let mut c = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            c.record(*t, *p);
        }
        c
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Lowering, Label::Lowering) => self.tp += 1,
            (Label::NotLowering, Label::Lowering) => self.fp += 1,
            (Label::NotLowering, Label::NotLowering) => self.tn += 1,
            (Label::Lowering, Label::NotLowering) => self.fn_ += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn scores(&self) -> Scores {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (precision, precision_undefined) = ratio(self.tp, self.tp + self.fp);
        let (recall, recall_undefined) = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Scores {
            precision,
            recall,
            f1,
            precision_undefined,
            recall_undefined,
        }
    }
}

/// Precision, recall and F1 of the lowering class. A zero denominator yields
/// 0 with the matching `*_undefined` flag set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionMetrics {
    pub repetition: usize,
    pub confusion: Confusion,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_repetition: Vec<RepetitionMetrics>,
    /// Confusion summed over every repetition and fold.
    pub pooled_confusion: Confusion,
    pub pooled: Scores,
    /// Arithmetic mean of the per-repetition scores.
    pub mean: Scores,
}

impl MetricsReport {
    pub fn from_repetitions(reps: Vec<Confusion>) -> Self {
        let mut pooled_confusion = Confusion::default();
        let mut mean = Scores::default();
        let n = reps.len().max(1) as f64;
        let per_repetition: Vec<RepetitionMetrics> = reps
            .into_iter()
            .enumerate()
            .map(|(repetition, confusion)| {
                pooled_confusion.merge(&confusion);
                let scores = confusion.scores();
                mean.precision += scores.precision / n;
                mean.recall += scores.recall / n;
                mean.f1 += scores.f1 / n;
                mean.precision_undefined |= scores.precision_undefined;
                mean.recall_undefined |= scores.recall_undefined;
                RepetitionMetrics {
                    repetition,
                    confusion,
                    scores,
                }
            })
            .collect();
        Self {
            per_repetition,
            pooled: pooled_confusion.scores(),
            pooled_confusion,
            mean,
        }
    }
}
