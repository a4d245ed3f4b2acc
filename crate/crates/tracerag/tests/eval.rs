use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use tracerag::core::analysis::BehaviorCategory;

const CATS: [&str; 3] = [
    "InformationTheftAndAbuse",
    "MonetaryFraudAndFinancialAbuse",
    "PrivilegeAbuseAndSystemExploitation",
];

fn subset(rng: &mut StdRng) -> Vec<&'static str> {
    CATS.iter().copied().filter(|_| rng.random_bool(0.5)).collect()
}

#[test]
fn eval_matches_loop_oracle() {
    assert_eq!(BehaviorCategory::ALL.len(), CATS.len());
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let (mut truth, mut verdicts) = (String::new(), String::new());
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        let (mut correct, mut total) = (0u64, 0u64);
        for i in 0..50 {
            let id = format!("app{i:02}");
            let is_mal = rng.random_bool(0.6);
            let pred = rng.random_bool(0.6);
            let labels = if is_mal { subset(&mut rng) } else { Vec::new() };
            let detected = subset(&mut rng);
            writeln!(truth, "{}", json!({"app_id": id, "is_malicious": is_mal, "behavior_labels": labels})).unwrap();
            writeln!(verdicts, "{}", json!({"app_id": id, "is_malicious": pred, "detected_categories": detected}))
                .unwrap();
            match (pred, is_mal) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
            let detected: BTreeSet<_> = detected.into_iter().collect();
            for l in &labels {
                total += 1;
                correct += u64::from(detected.contains(l));
            }
        }
        let t = dir.path().join(format!("truth{seed}.jsonl"));
        let v = dir.path().join(format!("verdicts{seed}.jsonl"));
        let out = dir.path().join(format!("eval{seed}.json"));
        std::fs::write(&t, truth).unwrap();
        std::fs::write(&v, verdicts).unwrap();
        let code = tracerag::cli::main_with_args([
            "tracerag",
            "eval",
            "--verdicts",
            v.to_str().unwrap(),
            "--truth",
            t.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let d = &r["detection"];
        assert_eq!((d["tp"].as_u64(), d["fp"].as_u64(), d["tn"].as_u64()), (Some(tp), Some(fp), Some(tn)));
        assert_eq!(d["fn"].as_u64().or(d["fn_"].as_u64()), Some(fn_));
        let close = |got: &Value, want: f64| (got.as_f64().unwrap() - want).abs() < 1e-12;
        let n = (tp + fp + fn_ + tn) as f64;
        assert!(close(&r["binary"]["accuracy"], (tp + tn) as f64 / n));
        if tp + fp > 0 {
            assert!(close(&r["binary"]["precision"], tp as f64 / (tp + fp) as f64));
        }
        if tp + fn_ > 0 {
            assert!(close(&r["binary"]["recall"], tp as f64 / (tp + fn_) as f64));
        }
        assert_eq!((r["behaviors_correct"].as_u64(), r["behaviors_total"].as_u64()), (Some(correct), Some(total)));
        if total > 0 {
            assert!(close(&r["behavior_accuracy"], correct as f64 / total as f64));
        }
    }
}

#[test]
fn mismatched_ids_fail() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    let v = dir.path().join("v.jsonl");
    std::fs::write(&t, "{\"app_id\":\"a\",\"is_malicious\":true}\n").unwrap();
    std::fs::write(&v, "{\"app_id\":\"b\",\"is_malicious\":true}\n").unwrap();
    let out = dir.path().join("o.json");
    let code = tracerag::cli::main_with_args([
        "tracerag",
        "eval",
        "--verdicts",
        v.to_str().unwrap(),
        "--truth",
        t.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(!out.exists());
}
