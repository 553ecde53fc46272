//! JSON-RPC download of raw blocks into a verbatim on-disk cache.
//!
//! Cache layout inside the cache directory:
//!
//! * `eth-<n>.block.json`: `eth_getBlockByNumber` result with full transactions
//! * `eth-<n>.trace.json`: `debug_traceBlockByNumber` result, prestate tracer
//! * `sol-<slot>.block.json`: `getBlock` result, transaction version 0
//! * `sol-<slot>.skipped.json`: marker for a slot that produced no block
//! * `manifest.jsonl`: one line per skipped slot or failed block
//!
//! Files hold the `result` member of the RPC response byte for byte and are
//! written via a temporary file and rename. A block whose files already exist
//! costs no request unless `force` is set.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use txconflict_core::Chain;

use crate::{fsio, Error};

pub const DEFAULT_RATE: f64 = 4.0;
pub const DEFAULT_RETRIES: u32 = 5;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const MANIFEST_FILE: &str = "manifest.jsonl";

const MAX_BACKOFF: Duration = Duration::from_secs(30);
/// Solana: slot skipped / slot missing from long-term storage.
const SOLANA_SKIPPED_CODES: [i64; 2] = [-32007, -32009];
/// Method not found / invalid params: retrying cannot help.
const FATAL_RPC_CODES: [i64; 2] = [-32601, -32602];

#[derive(Clone, Debug)]
pub struct FetchTarget {
    pub chain: Chain,
    pub endpoint: String,
    pub from: u64,
    pub to: u64,
    pub cache_dir: PathBuf,
    pub timeout: Duration,
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Requests per second across all workers.
    pub rate: f64,
    pub force: bool,
    /// Blocks in flight at once.
    pub concurrency: usize,
    /// First retry delay; doubles per attempt.
    pub backoff_base: Duration,
}

impl FetchTarget {
    pub fn new(chain: Chain, endpoint: impl Into<String>, from: u64, to: u64, cache_dir: impl Into<PathBuf>) -> Self {
        FetchTarget {
            chain,
            endpoint: endpoint.into(),
            from,
            to,
            cache_dir: cache_dir.into(),
            timeout: DEFAULT_TIMEOUT,
            max_retries: DEFAULT_RETRIES,
            rate: DEFAULT_RATE,
            force: false,
            concurrency: 1,
            backoff_base: Duration::from_millis(500),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.from > self.to {
            return Err(Error::structure(format!("empty range: from {} > to {}", self.from, self.to)));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::structure(format!("rate must be positive, got {}", self.rate)));
        }
        if self.concurrency == 0 {
            return Err(Error::structure("concurrency must be at least 1"));
        }
        if self.chain == Chain::Generic {
            return Err(Error::structure("fetch supports ethereum and solana only"));
        }
        Ok(())
    }

    fn files(&self, n: u64) -> Vec<PathBuf> {
        match self.chain {
            Chain::Ethereum => vec![eth_block_path(&self.cache_dir, n), eth_trace_path(&self.cache_dir, n)],
            _ => vec![sol_block_path(&self.cache_dir, n)],
        }
    }

    fn is_cached(&self, n: u64) -> bool {
        if self.chain == Chain::Solana && sol_skipped_path(&self.cache_dir, n).exists() {
            return true;
        }
        self.files(n).iter().all(|p| p.exists())
    }

    /// Requests the run would issue given the current cache, assuming no
    /// retries.
    pub fn planned_requests(&self) -> u64 {
        (self.from..=self.to)
            .filter(|&n| self.force || !self.is_cached(n))
            .map(|n| {
                if self.force {
                    self.files(n).len() as u64
                } else {
                    self.files(n).iter().filter(|p| !p.exists()).count() as u64
                }
            })
            .sum()
    }

    /// Lower bound on wall time imposed by the rate limit.
    pub fn estimated_wall_time(&self) -> Duration {
        Duration::from_secs_f64(self.planned_requests() as f64 / self.rate)
    }
}

pub fn eth_block_path(dir: &Path, n: u64) -> PathBuf {
    dir.join(format!("eth-{n}.block.json"))
}

pub fn eth_trace_path(dir: &Path, n: u64) -> PathBuf {
    dir.join(format!("eth-{n}.trace.json"))
}

pub fn sol_block_path(dir: &Path, slot: u64) -> PathBuf {
    dir.join(format!("sol-{slot}.block.json"))
}

pub fn sol_skipped_path(dir: &Path, slot: u64) -> PathBuf {
    dir.join(format!("sol-{slot}.skipped.json"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Cached,
    Fetched,
    Skipped,
    Failed(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FetchSummary {
    /// HTTP requests actually sent, retries included.
    pub requests: usize,
    pub cached: usize,
    pub fetched: usize,
    pub skipped: usize,
    pub failed: usize,
    /// Failed blocks in ascending order with their last error.
    pub failures: Vec<(u64, String)>,
}

impl FetchSummary {
    pub fn is_success(&self) -> bool {
        self.failed == 0
    }
}

impl std::fmt::Display for FetchSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} requests, {} fetched, {} cached, {} skipped, {} failed",
            self.requests, self.fetched, self.cached, self.skipped, self.failed
        )
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub chain: Chain,
    pub block: u64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub unix_time: u64,
}

pub fn read_manifest(cache_dir: &Path) -> Result<Vec<ManifestEntry>, Error> {
    let path = cache_dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    fsio::read_to_string(&path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Shared token slot: each request takes the next free instant.
struct RateLimiter {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateLimiter {
    fn new(rate: f64) -> Self {
        RateLimiter { interval: Duration::from_secs_f64(1.0 / rate), next: Mutex::new(Instant::now()) }
    }

    fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let at = (*next).max(now);
            *next = at + self.interval;
            at - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Debug)]
enum CallError {
    Retryable(String),
    Fatal(String),
    /// Solana slot without a block.
    Skipped,
}

#[derive(Deserialize)]
struct RpcResponse<'a> {
    #[serde(borrow, default)]
    result: Option<&'a RawValue>,
    #[serde(default)]
    error: Option<RpcError>,
}

#[derive(Deserialize)]
struct RpcError {
    code: i64,
    message: String,
}

struct Fetcher<'t> {
    target: &'t FetchTarget,
    agent: ureq::Agent,
    limiter: RateLimiter,
    requests: AtomicUsize,
    manifest: Mutex<()>,
    next_id: AtomicU64,
}

impl<'t> Fetcher<'t> {
    fn new(target: &'t FetchTarget) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(target.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Fetcher {
            target,
            agent,
            limiter: RateLimiter::new(target.rate),
            requests: AtomicUsize::new(0),
            manifest: Mutex::new(()),
            next_id: AtomicU64::new(1),
        }
    }

    /// One HTTP round trip. `Ok(None)` is a null result.
    fn call_once(&self, method: &str, params: &serde_json::Value) -> Result<Option<String>, CallError> {
        self.limiter.acquire();
        self.requests.fetch_add(1, Ordering::Relaxed);
        let body = serde_json::json!({
            "jsonrpc": "2.0",
            "id": self.next_id.fetch_add(1, Ordering::Relaxed),
            "method": method,
            "params": params,
        });
        let mut response = self
            .agent
            .post(&self.target.endpoint)
            .header("Content-Type", "application/json")
            .send(body.to_string())
            .map_err(|e| CallError::Retryable(format!("{method}: {e}")))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .with_config()
            .limit(u64::MAX)
            .read_to_string()
            .map_err(|e| CallError::Retryable(format!("{method}: reading body: {e}")))?;
        if status == 429 || status >= 500 {
            return Err(CallError::Retryable(format!("{method}: HTTP {status}")));
        }
        if status >= 400 {
            return Err(CallError::Fatal(format!("{method}: HTTP {status}")));
        }
        let parsed: RpcResponse<'_> = serde_json::from_str(&text)
            .map_err(|e| CallError::Retryable(format!("{method}: malformed response: {e}")))?;
        if let Some(err) = parsed.error {
            let msg = format!("{method}: RPC error {}: {}", err.code, err.message);
            if self.target.chain == Chain::Solana && SOLANA_SKIPPED_CODES.contains(&err.code) {
                return Err(CallError::Skipped);
            }
            if FATAL_RPC_CODES.contains(&err.code) {
                return Err(CallError::Fatal(msg));
            }
            return Err(CallError::Retryable(msg));
        }
        Ok(parsed.result.filter(|raw| raw.get() != "null").map(|raw| raw.get().to_string()))
    }

    fn call(&self, method: &str, params: serde_json::Value) -> Result<Option<String>, CallError> {
        let mut attempt = 0u32;
        loop {
            match self.call_once(method, &params) {
                Err(CallError::Retryable(msg)) if attempt < self.target.max_retries => {
                    let delay = self.target.backoff_base.saturating_mul(1u32 << attempt.min(16)).min(MAX_BACKOFF);
                    log::debug!("{msg}; retry {} in {delay:?}", attempt + 1);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(CallError::Retryable(msg)) => {
                    return Err(CallError::Fatal(format!("{msg} (after {} attempts)", attempt + 1)))
                }
                other => return other,
            }
        }
    }

    fn record(&self, block: u64, status: &str, error: Option<String>) {
        let entry = ManifestEntry {
            chain: self.target.chain,
            block,
            status: status.to_string(),
            error,
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let mut line = serde_json::to_string(&entry).expect("manifest entry serializes");
        line.push('\n');
        let path = self.target.cache_dir.join(MANIFEST_FILE);
        let _guard = self.manifest.lock().unwrap_or_else(|p| p.into_inner());
        let written =
            OpenOptions::new().create(true).append(true).open(&path).and_then(|mut f| f.write_all(line.as_bytes()));
        if let Err(e) = written {
            log::error!("{}: {e}", path.display());
        }
    }

    fn store(&self, path: &Path, text: Option<String>, what: &str) -> Result<(), String> {
        let text = text.ok_or_else(|| format!("{what}: null result"))?;
        fsio::write_atomic(path, text.as_bytes()).map_err(|e| e.to_string())
    }

    fn fetch_ethereum(&self, n: u64) -> Result<Outcome, CallError> {
        let dir = &self.target.cache_dir;
        let tag = format!("0x{n:x}");
        let (block, trace) = (eth_block_path(dir, n), eth_trace_path(dir, n));
        if self.target.force || !block.exists() {
            let text = self.call("eth_getBlockByNumber", serde_json::json!([tag, true]))?;
            self.store(&block, text, "eth_getBlockByNumber").map_err(CallError::Fatal)?;
        }
        if self.target.force || !trace.exists() {
            let text = self.call("debug_traceBlockByNumber", serde_json::json!([tag, {"tracer": "prestateTracer"}]))?;
            self.store(&trace, text, "debug_traceBlockByNumber").map_err(CallError::Fatal)?;
        }
        Ok(Outcome::Fetched)
    }

    fn fetch_solana(&self, slot: u64) -> Result<Outcome, CallError> {
        let params = serde_json::json!([slot, {
            "encoding": "json",
            "maxSupportedTransactionVersion": 0,
            "transactionDetails": "full",
            "rewards": false,
        }]);
        match self.call("getBlock", params)? {
            Some(text) => {
                fsio::write_atomic(&sol_block_path(&self.target.cache_dir, slot), text.as_bytes())
                    .map_err(|e| CallError::Fatal(e.to_string()))?;
                Ok(Outcome::Fetched)
            }
            None => Err(CallError::Skipped),
        }
    }

    fn fetch_one(&self, n: u64) -> Outcome {
        if !self.target.force && self.target.is_cached(n) {
            if self.target.chain == Chain::Solana && sol_skipped_path(&self.target.cache_dir, n).exists() {
                return Outcome::Skipped;
            }
            return Outcome::Cached;
        }
        let result = match self.target.chain {
            Chain::Ethereum => self.fetch_ethereum(n),
            _ => self.fetch_solana(n),
        };
        match result {
            Ok(outcome) => outcome,
            Err(CallError::Skipped) => {
                let marker = sol_skipped_path(&self.target.cache_dir, n);
                if let Err(e) = fsio::write_atomic(&marker, b"{\"skipped\":true}\n") {
                    log::error!("{e}");
                }
                self.record(n, "skipped", None);
                Outcome::Skipped
            }
            Err(CallError::Retryable(msg) | CallError::Fatal(msg)) => {
                self.record(n, "failed", Some(msg.clone()));
                Outcome::Failed(msg)
            }
        }
    }
}

/// Fetches every block of the range, `target.concurrency` at a time.
pub fn fetch_range(target: &FetchTarget) -> Result<FetchSummary, Error> {
    target.validate()?;
    std::fs::create_dir_all(&target.cache_dir).map_err(|e| Error::io(&target.cache_dir, e))?;
    let fetcher = Fetcher::new(target);
    let cursor = AtomicU64::new(0);
    let span = target.to - target.from;
    let outcomes: Mutex<Vec<(u64, Outcome)>> = Mutex::new(Vec::new());
    let workers = usize::try_from(span).map_or(target.concurrency, |s| target.concurrency.min(s + 1));

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let offset = cursor.fetch_add(1, Ordering::Relaxed);
                if offset > span {
                    break;
                }
                let n = target.from + offset;
                let outcome = fetcher.fetch_one(n);
                log::info!("{} {n}: {outcome:?}", target.chain.as_str());
                outcomes.lock().unwrap_or_else(|p| p.into_inner()).push((n, outcome));
            });
        }
    });

    let mut outcomes = outcomes.into_inner().unwrap_or_else(|p| p.into_inner());
    outcomes.sort_by_key(|(n, _)| *n);
    let mut summary = FetchSummary { requests: fetcher.requests.load(Ordering::Relaxed), ..FetchSummary::default() };
    for (n, outcome) in outcomes {
        match outcome {
            Outcome::Cached => summary.cached += 1,
            Outcome::Fetched => summary.fetched += 1,
            Outcome::Skipped => summary.skipped += 1,
            Outcome::Failed(msg) => {
                summary.failed += 1;
                summary.failures.push((n, msg));
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut t = FetchTarget::new(Chain::Solana, "http://127.0.0.1:9", 5, 4, "/tmp/x");
        assert!(t.validate().is_err());
        t.to = 5;
        assert!(t.validate().is_ok());
        t.rate = 0.0;
        assert!(t.validate().is_err());
        t.rate = f64::NAN;
        assert!(t.validate().is_err());
    }

    #[test]
    fn wall_time_estimate_follows_rate() {
        let dir = tempfile::tempdir().unwrap();
        let t = FetchTarget::new(Chain::Solana, "http://127.0.0.1:9", 1, 1000, dir.path());
        assert_eq!(t.planned_requests(), 1000);
        assert!(t.estimated_wall_time() >= Duration::from_secs(250));

        let e = FetchTarget::new(Chain::Ethereum, "http://127.0.0.1:9", 1, 10, dir.path());
        assert_eq!(e.planned_requests(), 20);
    }

    #[test]
    fn warm_cache_plans_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let t = FetchTarget::new(Chain::Solana, "http://127.0.0.1:9", 7, 8, dir.path());
        std::fs::write(sol_block_path(dir.path(), 7), "{}").unwrap();
        std::fs::write(sol_skipped_path(dir.path(), 8), "{}").unwrap();
        assert_eq!(t.planned_requests(), 0);
        let summary = fetch_range(&t).unwrap();
        assert_eq!(summary.requests, 0);
        assert_eq!((summary.cached, summary.skipped), (1, 1));
    }

    #[test]
    fn limiter_spaces_requests() {
        let limiter = RateLimiter::new(50.0);
        let start = Instant::now();
        for _ in 0..6 {
            limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(95));
    }
}
