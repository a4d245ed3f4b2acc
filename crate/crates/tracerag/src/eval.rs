//! Evaluation of verdicts against a labeled manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tracerag_core::analysis::BehaviorCategory;
use tracerag_core::metrics::{
    behavior_accuracy, binary_metrics, confusion, micro_metrics, BinaryMetrics, ConfusionCounts,
};
use tracerag_core::report::FinalReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub app_id: String,
    pub is_malicious: bool,
    #[serde(default)]
    pub behavior_labels: BTreeSet<BehaviorCategory>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub app_id: String,
    pub is_malicious: bool,
    #[serde(default)]
    pub detected_categories: BTreeSet<BehaviorCategory>,
}

impl From<&FinalReport> for VerdictRecord {
    fn from(r: &FinalReport) -> Self {
        VerdictRecord {
            app_id: r.app_info.app_id.clone(),
            is_malicious: r.verdict.is_malicious,
            detected_categories: r.verdict.detected_categories.clone(),
        }
    }
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{what} line {}", i + 1)))
        .collect()
}

pub fn load_truth(path: &Path) -> Result<BTreeMap<String, GroundTruth>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for t in parse_jsonl::<GroundTruth>(&text, "truth manifest")? {
        if !t.is_malicious && !t.behavior_labels.is_empty() {
            bail!("truth for {} is benign but has behavior labels", t.app_id);
        }
        if out.insert(t.app_id.clone(), t).is_some() {
            bail!("duplicate app_id in truth manifest");
        }
    }
    Ok(out)
}

fn verdicts_from_file(path: &Path) -> Result<Vec<VerdictRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(report) = serde_json::from_str::<FinalReport>(&text) {
        return Ok(vec![VerdictRecord::from(&report)]);
    }
    parse_jsonl(&text, &path.display().to_string())
}

/// A JSON Lines file of verdict records, a single structured report, or a
/// directory searched recursively for `report.json` files.
pub fn load_verdicts(path: &Path) -> Result<BTreeMap<String, VerdictRecord>> {
    let mut records = Vec::new();
    if path.is_dir() {
        for e in walkdir::WalkDir::new(path).sort_by_file_name() {
            let e = e?;
            if e.file_type().is_file() && e.file_name() == "report.json" {
                records.extend(verdicts_from_file(e.path())?);
            }
        }
    } else {
        records = verdicts_from_file(path)?;
    }
    let mut out = BTreeMap::new();
    for r in records {
        let id = r.app_id.clone();
        if out.insert(id.clone(), r).is_some() {
            bail!("duplicate verdict for {id}");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub counts: ConfusionCounts,
    /// Share of malicious samples whose label for this category was matched.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub detection: ConfusionCounts,
    pub binary: BinaryMetrics,
    pub per_category: BTreeMap<BehaviorCategory, CategoryScore>,
    pub micro: Option<BinaryMetrics>,
    pub behaviors_correct: u64,
    pub behaviors_total: u64,
    pub behavior_accuracy: Option<f64>,
}

/// Detection metrics over every sample; behavior metrics over samples whose
/// truth is malicious.
pub fn evaluate(
    verdicts: &BTreeMap<String, VerdictRecord>,
    truth: &BTreeMap<String, GroundTruth>,
) -> Result<EvalReport> {
    let pred: BTreeMap<&str, bool> = verdicts.iter().map(|(k, v)| (k.as_str(), v.is_malicious)).collect();
    let gold: BTreeMap<&str, bool> = truth.iter().map(|(k, v)| (k.as_str(), v.is_malicious)).collect();
    let detection = confusion(&pred, &gold)?;
    let binary = binary_metrics(detection)?;

    let malicious: Vec<&GroundTruth> = truth.values().filter(|t| t.is_malicious).collect();
    let mut per_category = BTreeMap::new();
    let (mut correct, mut total) = (0u64, 0u64);
    for cat in BehaviorCategory::ALL {
        let mut c = ConfusionCounts::default();
        for t in &malicious {
            let labeled = t.behavior_labels.contains(&cat);
            let detected = verdicts[&t.app_id].detected_categories.contains(&cat);
            c.add(detected, labeled);
            if labeled {
                total += 1;
                correct += u64::from(detected);
            }
        }
        let accuracy = (c.total() > 0).then(|| (c.tp + c.tn) as f64 / c.total() as f64);
        per_category.insert(cat, CategoryScore { counts: c, accuracy });
    }
    let counts: Vec<ConfusionCounts> = per_category.values().map(|s| s.counts).collect();
    Ok(EvalReport {
        samples: truth.len(),
        detection,
        binary,
        micro: micro_metrics(&counts).ok(),
        per_category,
        behaviors_correct: correct,
        behaviors_total: total,
        behavior_accuracy: behavior_accuracy(correct, total).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(id: &str, mal: bool, labels: &[BehaviorCategory]) -> (String, GroundTruth) {
        (id.into(), GroundTruth { app_id: id.into(), is_malicious: mal, behavior_labels: labels.iter().copied().collect() })
    }

    fn verdict(id: &str, mal: bool, cats: &[BehaviorCategory]) -> (String, VerdictRecord) {
        (id.into(), VerdictRecord { app_id: id.into(), is_malicious: mal, detected_categories: cats.iter().copied().collect() })
    }

    use BehaviorCategory::*;

    #[test]
    fn scores_detection_and_behaviors() {
        let t: BTreeMap<_, _> = [
            truth("a", true, &[InformationTheftAndAbuse, MonetaryFraudAndFinancialAbuse]),
            truth("b", true, &[PrivilegeAbuseAndSystemExploitation]),
            truth("c", false, &[]),
            truth("d", false, &[]),
        ]
        .into();
        let v: BTreeMap<_, _> = [
            verdict("a", true, &[InformationTheftAndAbuse]),
            verdict("b", true, &[PrivilegeAbuseAndSystemExploitation]),
            verdict("c", true, &[MonetaryFraudAndFinancialAbuse]),
            verdict("d", false, &[]),
        ]
        .into();
        let r = evaluate(&v, &t).unwrap();
        assert_eq!(r.detection, ConfusionCounts::new(2, 1, 0, 1));
        assert_eq!((r.behaviors_correct, r.behaviors_total), (2, 3));
        assert_eq!(r.per_category[&MonetaryFraudAndFinancialAbuse].counts, ConfusionCounts::new(0, 0, 1, 1));
        assert_eq!(r.per_category[&MonetaryFraudAndFinancialAbuse].accuracy, Some(0.5));
    }

    #[test]
    fn key_mismatch_is_an_error() {
        let t: BTreeMap<_, _> = [truth("a", true, &[])].into();
        let v: BTreeMap<_, _> = [verdict("b", true, &[])].into();
        assert!(evaluate(&v, &t).is_err());
    }
}
