use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SECRET: &str = "sk-test-DO-NOT-LEAK-7f3a9c";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn tracerag(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tracerag"));
    c.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("TRACERAG_") {
            c.env_remove(k);
        }
    }
    c.env_remove("RUST_LOG");
    c
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn all_text(dir: &Path) -> String {
    let mut out = String::new();
    for e in walkdir(dir) {
        out.push_str(&String::from_utf8_lossy(&std::fs::read(e).unwrap()));
    }
    out
}

fn walkdir(dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walkdir(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn missing_replay_cache_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let app = fixtures().join("apps/benign");
    let out = tracerag(&[
        "--llm-mode",
        "replay",
        "run",
        "--app-root",
        s(&app),
        "--app-id",
        "benign",
        "--cache",
        s(&dir.path().join("absent.jsonl")),
        "--out-dir",
        s(&dir.path().join("out")),
    ])
    .output()
    .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("out/report.md").exists());
}

#[test]
fn usage_errors_exit_2() {
    let out = tracerag(&["run", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = tracerag(&["--llm-mode", "sometimes", "eval", "--verdicts", "a", "--truth", "b", "--out", "c"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[analysis]\ntop_k = 0\n").unwrap();
    let out = tracerag(&[
        "--config",
        s(&cfg),
        "analyze",
        "--store",
        "x",
        "--out",
        "y",
    ])
    .output()
    .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(&cfg, "[llm]\nunknown_knob = 1\n").unwrap();
    let out = tracerag(&["--config", s(&cfg), "analyze", "--store", "x", "--out", "y"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreachable_endpoint_fails_queries_without_leaking_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[llm]\nbase_url = \"http://127.0.0.1:9/v1\"\nretry_base_ms = 1\ntimeout_secs = 2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out: Output = tracerag(&[
        "--config",
        s(&cfg),
        "-vv",
        "run",
        "--app-root",
        s(&fixtures().join("apps/benign")),
        "--app-id",
        "benign",
        "--provider",
        "mock",
        "--out-dir",
        s(&out_dir),
    ])
    .env("TRACERAG_API_KEY", SECRET)
    .output()
    .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(3), "{stderr}");
    assert!(!stderr.contains(SECRET));
    assert!(!String::from_utf8_lossy(&out.stdout).contains(SECRET));
    assert!(!all_text(&out_dir).contains(SECRET));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["analysis"]["failed_queries"].as_array().unwrap().len(), 11);
}

#[test]
fn missing_api_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tracerag(&[
        "run",
        "--app-root",
        s(&fixtures().join("apps/benign")),
        "--app-id",
        "benign",
        "--out-dir",
        s(dir.path()),
    ])
    .output()
    .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn stepwise_commands_reproduce_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let app = fixtures().join("apps/malicious");
    let cache = app.join("replay.jsonl");
    let ok = |args: &[&str]| {
        let out = tracerag(&[&["--llm-mode", "replay"], args].concat()).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    let app_s = s(&app);
    let cache_s = s(&cache);
    let run_dir = d.join("run");
    ok(&["run", "--app-root", app_s, "--app-id", "malicious", "--provider", "mock", "--cache", cache_s, "--out-dir", s(&run_dir)]);
    let store = d.join("store.jsonl");
    let outcomes = d.join("outcomes.json");
    let md = d.join("report.md");
    let js = d.join("report.json");
    ok(&["index", "--app-root", app_s, "--app-id", "malicious", "--provider", "mock", "--cache", cache_s, "--out", s(&store)]);
    ok(&["analyze", "--store", s(&store), "--cache", cache_s, "--out", s(&outcomes)]);
    ok(&["report", "--outcomes", s(&outcomes), "--store", s(&store), "--cache", cache_s, "--out", s(&md)]);
    ok(&["report", "--outcomes", s(&outcomes), "--store", s(&store), "--cache", cache_s, "--format", "structured", "--out", s(&js)]);

    for (a, b) in [(&store, "store.jsonl"), (&outcomes, "outcomes.json"), (&md, "report.md"), (&js, "report.json")] {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(run_dir.join(b)).unwrap(), "{b} differs");
    }
}
