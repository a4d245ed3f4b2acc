//! Binary detection metrics and per-query behavior accuracy.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("prediction and truth key sets differ (first mismatch: {0})")]
    KeyMismatch(String),
    #[error("no samples to score")]
    EmptyCounts,
    #[error("behavior accuracy is undefined for zero total")]
    ZeroTotal,
    #[error("correct ({correct}) exceeds total ({total})")]
    CorrectExceedsTotal { correct: u64, total: u64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

impl core::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;
    fn add(self, o: Self) -> Self {
        ConfusionCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

/// `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl BinaryMetrics {
    pub fn rounded(&self) -> BinaryMetrics {
        BinaryMetrics {
            accuracy: self.accuracy.map(round4),
            precision: self.precision.map(round4),
            recall: self.recall.map(round4),
            f1: self.f1.map(round4),
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn binary_metrics(c: ConfusionCounts) -> Result<BinaryMetrics, MetricsError> {
    if c.total() == 0 {
        return Err(MetricsError::EmptyCounts);
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(BinaryMetrics { accuracy: ratio(c.tp + c.tn, c.total()), precision, recall, f1 })
}

/// Builds counts from two maps that must share exactly the same keys.
pub fn confusion<K: Ord + core::fmt::Debug>(
    predicted: &BTreeMap<K, bool>,
    truth: &BTreeMap<K, bool>,
) -> Result<ConfusionCounts, MetricsError> {
    if let Some(k) = predicted.keys().find(|k| !truth.contains_key(*k)) {
        return Err(MetricsError::KeyMismatch(alloc::format!("{k:?}")));
    }
    if let Some(k) = truth.keys().find(|k| !predicted.contains_key(*k)) {
        return Err(MetricsError::KeyMismatch(alloc::format!("{k:?}")));
    }
    let mut c = ConfusionCounts::default();
    for (k, &t) in truth {
        c.add(predicted[k], t);
    }
    Ok(c)
}

/// Micro-averaged metrics over pooled per-category counts.
/// Accuracy is carried along for completeness; only precision, recall and
/// F1 are meaningful when pooled.
pub fn micro_metrics<'a, I: IntoIterator<Item = &'a ConfusionCounts>>(
    per_category: I,
) -> Result<BinaryMetrics, MetricsError> {
    let mut pooled = ConfusionCounts::default();
    let mut n = 0;
    for c in per_category {
        pooled = pooled + *c;
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::EmptyCounts);
    }
    binary_metrics(pooled)
}

pub fn behavior_accuracy(correct: u64, total: u64) -> Result<f64, MetricsError> {
    if total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    if correct > total {
        return Err(MetricsError::CorrectExceedsTotal { correct, total });
    }
    Ok(correct as f64 / total as f64)
}

/// Rounds to four decimal places, ties to even.
pub fn round4(x: f64) -> f64 {
    let scaled = x * 10_000.0;
    let r = libm::round(scaled);
    let r = if libm::fabs(scaled - libm::trunc(scaled)) == 0.5 && libm::fmod(r, 2.0) != 0.0 {
        r - libm::copysign(1.0, scaled)
    } else {
        r
    };
    r / 10_000.0
}
