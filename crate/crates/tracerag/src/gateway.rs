//! Chat-completion gateway: live provider calls, a JSON Lines record/replay
//! cache, bounded retries, a concurrency limit and per-role call counters.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracerag_core::llm::{ChatModel, CompletionRequest, CompletionResponse, LlmError, Role, TokenUsage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    #[default]
    Live,
    Replay,
    Record,
}

impl FromStr for LlmMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(LlmMode::Live),
            "replay" => Ok(LlmMode::Replay),
            "record" => Ok(LlmMode::Record),
            other => Err(format!("unknown llm mode `{other}` (expected live, replay or record)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cannot read replay cache {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("replay cache {path} line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokens {
    pub input: u64,
    pub output: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub role: String,
    pub model: String,
    pub response: String,
    pub tokens: Tokens,
}

/// Map from request digest to response. Later lines win on load; saving
/// rewrites the file sorted by key.
#[derive(Debug, Default)]
pub struct ReplayCache {
    entries: BTreeMap<String, CacheEntry>,
    path: Option<PathBuf>,
}

impl ReplayCache {
    pub fn in_memory() -> Self {
        ReplayCache::default()
    }

    pub fn load(path: &Path) -> Result<Self, CacheError> {
        let file = File::open(path).map_err(|source| CacheError::Io { path: path.into(), source })?;
        let mut entries = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CacheError::Io { path: path.into(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CacheEntry = serde_json::from_str(&line).map_err(|e| CacheError::Parse {
                path: path.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.insert(entry.key.clone(), entry);
        }
        Ok(ReplayCache { entries, path: Some(path.into()) })
    }

    /// Loads `path` if it exists, otherwise starts empty and will write there.
    pub fn open_or_create(path: &Path) -> Result<Self, CacheError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(ReplayCache { entries: BTreeMap::new(), path: Some(path.into()) })
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&CacheEntry> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }

    /// Inserts and appends the entry to the backing file, if any.
    pub fn insert(&mut self, entry: CacheEntry) -> std::io::Result<()> {
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", serde_json::to_string(&entry).map_err(std::io::Error::other)?)?;
        }
        self.entries.insert(entry.key.clone(), entry);
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in self.entries.values() {
            out.push_str(&serde_json::to_string(e).expect("cache entries serialize"));
            out.push('\n');
        }
        out
    }

    /// Rewrites the backing file deduplicated and sorted by key.
    pub fn compact(&self) -> std::io::Result<()> {
        match &self.path {
            Some(path) => fs::write(path, self.to_jsonl()),
            None => Ok(()),
        }
    }
}

/// A backend that answers requests for real (HTTP, or a scripted stand-in).
pub trait Provider: Send + Sync {
    fn call(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

fn retryable(e: &LlmError) -> bool {
    matches!(e, LlmError::Provider { status, .. } if *status == 0 || *status == 408 || *status == 429 || *status >= 500)
}

/// Counting semaphore over a mutex and condvar.
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> LimiterGuard<'_> {
        let mut free = self.free.lock().expect("limiter lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("limiter lock");
        }
        *free -= 1;
        LimiterGuard(self)
    }
}

struct LimiterGuard<'a>(&'a Limiter);

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("limiter lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    /// Every completion requested, by role name, whether served live or from cache.
    pub calls_by_role: BTreeMap<String, u64>,
    pub live_calls: u64,
    pub cache_hits: u64,
    pub failures: u64,
    pub tokens: TokenUsage,
}

impl GatewayStats {
    pub fn calls(&self, role: Role) -> u64 {
        self.calls_by_role.get(role.name()).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> u64 {
        self.calls_by_role.values().sum()
    }
}

pub struct Gateway {
    mode: LlmMode,
    provider: Option<Box<dyn Provider>>,
    cache: Mutex<ReplayCache>,
    limiter: Limiter,
    retry: RetryPolicy,
    stats: Mutex<GatewayStats>,
}

impl Gateway {
    pub fn new(mode: LlmMode, provider: Option<Box<dyn Provider>>, cache: ReplayCache) -> Self {
        Gateway {
            mode,
            provider,
            cache: Mutex::new(cache),
            limiter: Limiter::new(4),
            retry: RetryPolicy::default(),
            stats: Mutex::new(GatewayStats::default()),
        }
    }

    /// Replay-only gateway over an existing cache.
    pub fn replay(cache: ReplayCache) -> Self {
        Self::new(LlmMode::Replay, None, cache)
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.limiter = Limiter::new(limit);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> LlmMode {
        self.mode
    }

    pub fn stats(&self) -> GatewayStats {
        self.stats.lock().expect("stats lock").clone()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn cache_jsonl(&self) -> String {
        self.cache.lock().expect("cache lock").to_jsonl()
    }

    /// Rewrites the cache file sorted and deduplicated (record mode).
    pub fn persist(&self) -> std::io::Result<()> {
        if self.mode == LlmMode::Record {
            self.cache.lock().expect("cache lock").compact()
        } else {
            Ok(())
        }
    }

    fn call_provider(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let provider = self.provider.as_ref().ok_or_else(|| LlmError::Provider {
            status: 0,
            message: "no provider configured".into(),
        })?;
        let _slot = self.limiter.acquire();
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.stats.lock().expect("stats lock").live_calls += 1;
            let started = Instant::now();
            match provider.call(req) {
                Ok(mut resp) => {
                    if resp.latency_ms == 0 {
                        resp.latency_ms = started.elapsed().as_millis() as u64;
                    }
                    return Ok(resp);
                }
                Err(e) if attempt < self.retry.attempts && retryable(&e) => {
                    let delay = self.retry.base_delay * 2u32.pow(attempt - 1);
                    tracing::warn!(role = %req.role, attempt, error = %e, "provider call failed; retrying");
                    std::thread::sleep(delay);
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn complete_inner(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let key = req.cache_key();
        match self.mode {
            LlmMode::Replay => {
                let cache = self.cache.lock().expect("cache lock");
                let entry = cache.get(&key).ok_or_else(|| LlmError::CacheMiss(key.clone()))?;
                self.stats.lock().expect("stats lock").cache_hits += 1;
                Ok(CompletionResponse {
                    text: entry.response.clone(),
                    input_tokens: entry.tokens.input,
                    output_tokens: entry.tokens.output,
                    latency_ms: 0,
                })
            }
            LlmMode::Live => self.call_provider(req),
            LlmMode::Record => {
                let resp = self.call_provider(req)?;
                let entry = CacheEntry {
                    key,
                    role: req.role.name().to_string(),
                    model: req.model.clone(),
                    response: resp.text.clone(),
                    tokens: Tokens { input: resp.input_tokens, output: resp.output_tokens },
                };
                self.cache.lock().expect("cache lock").insert(entry).map_err(|e| LlmError::Provider {
                    status: 0,
                    message: format!("cannot write replay cache: {e}"),
                })?;
                Ok(resp)
            }
        }
    }
}

impl ChatModel for Gateway {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        *self
            .stats
            .lock()
            .expect("stats lock")
            .calls_by_role
            .entry(req.role.name().to_string())
            .or_default() += 1;
        let result = self.complete_inner(req);
        let mut stats = self.stats.lock().expect("stats lock");
        match &result {
            Ok(resp) => stats.tokens.add(resp),
            Err(e) => {
                stats.failures += 1;
                tracing::debug!(role = %req.role, error = %e, "completion failed");
            }
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Flaky {
        failures_left: AtomicUsize,
        calls: Arc<AtomicUsize>,
        status: u16,
    }

    impl Provider for Flaky {
        fn call(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.failures_left.load(Ordering::SeqCst) > 0 {
                self.failures_left.fetch_sub(1, Ordering::SeqCst);
                return Err(LlmError::Provider { status: self.status, message: "nope".into() });
            }
            Ok(CompletionResponse { text: format!("echo:{}", req.prompt), input_tokens: 3, output_tokens: 2, latency_ms: 1 })
        }
    }

    fn flaky(failures: usize, status: u16) -> (Box<dyn Provider>, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (Box::new(Flaky { failures_left: AtomicUsize::new(failures), calls: calls.clone(), status }), calls)
    }

    fn req(prompt: &str) -> CompletionRequest {
        CompletionRequest::new(Role::Describer, prompt.into(), "m")
    }

    fn fast() -> RetryPolicy {
        RetryPolicy { attempts: 3, base_delay: Duration::ZERO }
    }

    #[test]
    fn record_then_replay_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let (p, _) = flaky(0, 500);
        let rec = Gateway::new(LlmMode::Record, Some(p), ReplayCache::open_or_create(&path).unwrap());
        let a = rec.complete(&req("hello")).unwrap();
        rec.persist().unwrap();

        let rep = Gateway::replay(ReplayCache::load(&path).unwrap());
        let b = rep.complete(&req("hello")).unwrap();
        assert_eq!(a.text, b.text);
        assert_eq!((b.input_tokens, b.output_tokens), (3, 2));
        assert_eq!(rep.stats().live_calls, 0);
        assert_eq!(rep.stats().cache_hits, 1);
    }

    #[test]
    fn replay_miss() {
        let g = Gateway::replay(ReplayCache::in_memory());
        let err = g.complete(&req("x")).unwrap_err();
        assert_eq!(err, LlmError::CacheMiss(req("x").cache_key()));
        assert_eq!(g.stats().calls(Role::Describer), 1);
        assert_eq!(g.stats().failures, 1);
    }

    #[test]
    fn retries_transient_errors_three_times() {
        let (p, calls) = flaky(2, 503);
        let g = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory()).with_retry(fast());
        assert!(g.complete(&req("x")).is_ok());
        assert_eq!(calls.load(Ordering::SeqCst), 3);

        let (p, calls) = flaky(5, 503);
        let g = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory()).with_retry(fast());
        assert!(matches!(g.complete(&req("x")), Err(LlmError::Provider { status: 503, .. })));
        assert_eq!(calls.load(Ordering::SeqCst), 3);

        let (p, calls) = flaky(5, 401);
        let g = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory()).with_retry(fast());
        assert!(g.complete(&req("x")).is_err());
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn token_totals_sum_completions() {
        let (p, _) = flaky(0, 500);
        let g = Gateway::new(LlmMode::Live, Some(p), ReplayCache::in_memory());
        for i in 0..7 {
            g.complete(&req(&i.to_string())).unwrap();
        }
        let s = g.stats();
        assert_eq!((s.tokens.input, s.tokens.output), (21, 14));
        assert_eq!(s.live_calls, 7);
    }

    #[test]
    fn seven_cached_entries_serve_seven_calls_offline() {
        let (p, _) = flaky(0, 500);
        let rec = Gateway::new(LlmMode::Record, Some(p), ReplayCache::in_memory());
        for i in 0..7 {
            rec.complete(&req(&i.to_string())).unwrap();
        }
        assert_eq!(rec.cache_len(), 7);

        let (p, calls) = flaky(0, 500);
        let cache = rec.cache.into_inner().unwrap();
        let g = Gateway::new(LlmMode::Replay, Some(p), cache);
        for i in 0..7 {
            g.complete(&req(&i.to_string())).unwrap();
        }
        assert_eq!(calls.load(Ordering::SeqCst), 0);
        assert_eq!(g.stats().live_calls, 0);
    }

    #[test]
    fn cache_file_round_trips_and_later_lines_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut c = ReplayCache::open_or_create(&path).unwrap();
        let e = |resp: &str| CacheEntry {
            key: "k".into(),
            role: "Analyzer".into(),
            model: "m".into(),
            response: resp.into(),
            tokens: Tokens { input: 1, output: 2 },
        };
        c.insert(e("first\nwith \"quotes\" and unicode é")).unwrap();
        c.insert(e("second")).unwrap();
        let loaded = ReplayCache::load(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded.get("k").unwrap().response, "second");
        loaded.compact().unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1);

        fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(ReplayCache::load(&path), Err(CacheError::Parse { line: 1, .. })));
    }

    #[test]
    fn concurrent_calls_are_counted_exactly() {
        let (p, calls) = flaky(0, 500);
        let g = Gateway::new(LlmMode::Record, Some(p), ReplayCache::in_memory()).with_concurrency(2);
        std::thread::scope(|s| {
            for t in 0..8 {
                let g = &g;
                s.spawn(move || {
                    for i in 0..10 {
                        g.complete(&req(&format!("{t}-{i}"))).unwrap();
                    }
                });
            }
        });
        assert_eq!(calls.load(Ordering::SeqCst), 80);
        assert_eq!(g.stats().calls(Role::Describer), 80);
        assert_eq!(g.cache_len(), 80);
    }
}
