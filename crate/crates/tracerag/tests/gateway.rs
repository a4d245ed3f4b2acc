use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use tracerag::core::llm::{ChatModel, CompletionRequest, CompletionResponse, LlmError, Role};
use tracerag::gateway::{Gateway, LlmMode, Provider, ReplayCache, RetryPolicy};

/// Answers `echo:<prompt>`, failing the first `fail_first` calls with `status`.
struct Counting {
    calls: Arc<AtomicUsize>,
    fail_first: usize,
    status: u16,
}

impl Provider for Counting {
    fn call(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if n < self.fail_first {
            return Err(LlmError::Provider { status: self.status, message: "try later".into() });
        }
        Ok(CompletionResponse { text: format!("echo:{}", req.prompt), input_tokens: 3, output_tokens: 2, latency_ms: 1 })
    }
}

fn provider(fail_first: usize, status: u16) -> (Box<dyn Provider>, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    (Box::new(Counting { calls: calls.clone(), fail_first, status }), calls)
}

fn fast() -> RetryPolicy {
    RetryPolicy { attempts: 3, base_delay: Duration::from_millis(1) }
}

fn req(role: Role, prompt: &str) -> CompletionRequest {
    CompletionRequest::new(role, prompt.into(), "m")
}

#[test]
fn record_then_replay_without_provider() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let (p, calls) = provider(0, 0);
    let gw = Gateway::new(LlmMode::Record, Some(p), ReplayCache::open_or_create(&path).unwrap());
    let prompts = ["b", "a", "c", "a"];
    for prompt in prompts {
        assert_eq!(gw.complete(&req(Role::Describer, prompt)).unwrap().text, format!("echo:{prompt}"));
    }
    gw.persist().unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 4);

    let text = std::fs::read_to_string(&path).unwrap();
    let keys: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["key"].as_str().unwrap().to_string())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(keys, sorted, "persisted cache is sorted and deduplicated");
    assert_eq!(keys.len(), 3);

    let replay = Gateway::replay(ReplayCache::load(&path).unwrap());
    for prompt in prompts {
        let r = replay.complete(&req(Role::Describer, prompt)).unwrap();
        assert_eq!(r.text, format!("echo:{prompt}"));
        assert_eq!((r.input_tokens, r.output_tokens), (3, 2));
    }
    let stats = replay.stats();
    assert_eq!((stats.live_calls, stats.cache_hits), (0, 4));
    assert_eq!(stats.calls(Role::Describer), 4);

    let miss = replay.complete(&req(Role::Analyzer, "a")).unwrap_err();
    assert!(matches!(miss, LlmError::CacheMiss(ref k) if *k == req(Role::Analyzer, "a").cache_key()));
    assert_eq!(replay.stats().failures, 1);
}

#[test]
fn transient_errors_are_retried() {
    let (p, calls) = provider(2, 503);
    let gw = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory()).with_retry(fast());
    assert!(gw.complete(&req(Role::Organizer, "x")).is_ok());
    assert_eq!(calls.load(Ordering::SeqCst), 3);
    assert_eq!(gw.stats().live_calls, 3);

    let (p, calls) = provider(5, 429);
    let gw = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory()).with_retry(fast());
    assert!(matches!(gw.complete(&req(Role::Organizer, "x")), Err(LlmError::Provider { status: 429, .. })));
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (p, calls) = provider(5, 400);
    let gw = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory()).with_retry(fast());
    assert!(gw.complete(&req(Role::Organizer, "x")).is_err());
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn record_mode_keeps_existing_entries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    for prompt in ["first", "second"] {
        let (p, _) = provider(0, 0);
        let gw = Gateway::new(LlmMode::Record, Some(p), ReplayCache::open_or_create(&path).unwrap());
        gw.complete(&req(Role::Cleanser, prompt)).unwrap();
        gw.persist().unwrap();
    }
    let replay = Gateway::replay(ReplayCache::load(&path).unwrap());
    assert!(replay.complete(&req(Role::Cleanser, "first")).is_ok());
    assert!(replay.complete(&req(Role::Cleanser, "second")).is_ok());
}

#[test]
fn concurrent_callers_share_counters() {
    let (p, calls) = provider(0, 0);
    let gw = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory()).with_concurrency(2);
    std::thread::scope(|s| {
        for t in 0..8 {
            let gw = &gw;
            s.spawn(move || {
                for i in 0..10 {
                    gw.complete(&req(Role::RelevanceReviewer, &format!("{t}-{i}"))).unwrap();
                }
            });
        }
    });
    assert_eq!(calls.load(Ordering::SeqCst), 80);
    assert_eq!(gw.stats().calls(Role::RelevanceReviewer), 80);
}
