//! Client for a remote scoring service, with an append-only on-disk cache.
//!
//! Wire protocol (JSON over HTTP):
//!
//! - `GET /info` -> `{"protocol_version": "1", "model_id": .., "deterministic": bool, ..}`
//! - `POST /score` with a [`ScoreRequest`] -> `{"score": number}`
//! - `POST /score_batch` with `{"items": [ScoreRequest..]}` -> `{"scores": [number..]}`
//!
//! The cache file holds one JSON header line naming the model and protocol
//! version, followed by one JSON record per evaluated context.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{BimodalContext, GameOracle, OracleMetadata};

pub const PROTOCOL_MAJOR: u32 = 1;
const CACHE_FORMAT: &str = "harsanyi-score-cache";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    pub cache_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub attempts: u32,
    pub backoff_base: Duration,
    pub batch_size: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(60),
            cache_dir: None,
            max_in_flight: 8,
            attempts: 3,
            backoff_base: Duration::from_millis(250),
            batch_size: 256,
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteInfo {
    pub protocol_version: String,
    pub model_id: String,
    pub deterministic: bool,
    /// Anything else the server declares, e.g. its masking mode.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub sample_id: String,
    pub visible_regions: Vec<u32>,
    pub visible_tokens: Vec<u32>,
    pub caption_id: String,
    pub image_id: String,
}

impl From<&BimodalContext> for ScoreRequest {
    fn from(ctx: &BimodalContext) -> Self {
        Self {
            sample_id: ctx.game.sample_id.to_string(),
            visible_regions: ctx.image.members().map(|i| i as u32).collect(),
            visible_tokens: ctx.text.members().map(|i| i as u32).collect(),
            caption_id: ctx.game.caption_id.to_string(),
            image_id: ctx.game.image_id.to_string(),
        }
    }
}

#[derive(Serialize)]
struct BatchRequest<'a> {
    items: &'a [ScoreRequest],
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
struct CacheKey {
    sample_id: String,
    image_id: String,
    caption_id: String,
    image_bits: u32,
    text_bits: u32,
}

impl From<&BimodalContext> for CacheKey {
    fn from(ctx: &BimodalContext) -> Self {
        Self {
            sample_id: ctx.game.sample_id.to_string(),
            image_id: ctx.game.image_id.to_string(),
            caption_id: ctx.game.caption_id.to_string(),
            image_bits: ctx.image.bits(),
            text_bits: ctx.text.bits(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    format: String,
    model_id: String,
    protocol_version: String,
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    #[serde(flatten)]
    key: CacheKey,
    score: f64,
}

/// Scores keyed by context for one model; optionally persisted as JSON lines.
pub struct DiskCache {
    path: Option<PathBuf>,
    entries: DashMap<CacheKey, f64>,
    writer: Mutex<Option<File>>,
}

impl DiskCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: DashMap::new(),
            writer: Mutex::new(None),
        }
    }

    /// Opens (or creates) `<dir>/<model_id>.jsonl`.
    pub fn open(dir: &Path, model_id: &str, protocol_version: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let name: String = model_id
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        let path = dir.join(format!("{name}.jsonl"));
        let entries = DashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            let mut lines = reader.lines();
            let header: CacheHeader = match lines.next() {
                Some(line) => serde_json::from_str(&line?)
                    .map_err(|e| Error::ProtocolMismatch(format!("{}: bad cache header: {e}", path.display())))?,
                None => return Err(Error::ProtocolMismatch(format!("{}: empty cache file", path.display()))),
            };
            if header.format != CACHE_FORMAT
                || header.model_id != model_id
                || header.protocol_version != protocol_version
            {
                return Err(Error::ProtocolMismatch(format!(
                    "{}: cache belongs to model {} protocol {}, not {} protocol {}",
                    path.display(),
                    header.model_id,
                    header.protocol_version,
                    model_id,
                    protocol_version
                )));
            }
            for (n, line) in lines.enumerate() {
                let line = line?;
                match serde_json::from_str::<CacheRecord>(&line) {
                    // first record wins; entries are immutable
                    Ok(r) => {
                        entries.entry(r.key).or_insert(r.score);
                    }
                    Err(e) => log::warn!("{}:{}: skipping unreadable cache record: {e}", path.display(), n + 2),
                }
            }
        } else {
            let mut f = File::create(&path)?;
            let header = CacheHeader {
                format: CACHE_FORMAT.into(),
                model_id: model_id.into(),
                protocol_version: protocol_version.into(),
            };
            writeln!(f, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        }
        let writer = OpenOptions::new().append(true).open(&path)?;
        Ok(Self {
            path: Some(path),
            entries,
            writer: Mutex::new(Some(writer)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn get(&self, ctx: &BimodalContext) -> Option<f64> {
        self.entries.get(&CacheKey::from(ctx)).map(|v| *v)
    }

    fn store(&self, items: &[(&BimodalContext, f64)]) -> Result<()> {
        let mut fresh = Vec::new();
        for &(ctx, score) in items {
            let key = CacheKey::from(ctx);
            if !self.entries.contains_key(&key) {
                self.entries.insert(key.clone(), score);
                fresh.push(CacheRecord { key, score });
            }
        }
        let mut guard = self.writer.lock().expect("cache writer poisoned");
        if let Some(f) = guard.as_mut() {
            let mut buf = String::new();
            for r in &fresh {
                buf.push_str(&serde_json::to_string(r).expect("record serializes"));
                buf.push('\n');
            }
            f.write_all(buf.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }
}

enum Failure {
    Retryable(String),
    Fatal(Error),
}

pub struct RemoteOracle {
    config: RemoteConfig,
    info: RemoteInfo,
    agent: ureq::Agent,
    cache: DiskCache,
    requests: AtomicU64,
}

impl RemoteOracle {
    /// Fetches `/info`, checks the protocol version and opens the cache.
    pub fn connect(config: RemoteConfig) -> Result<Self> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/info", config.endpoint);
        let info: RemoteInfo = with_retries(&config, || {
            let mut resp = agent.get(&url).call().map_err(|e| Failure::Retryable(e.to_string()))?;
            check_status(resp.status().as_u16())?;
            resp.body_mut()
                .read_json::<RemoteInfo>()
                .map_err(|e| Failure::Fatal(Error::ProtocolMismatch(format!("/info: {e}"))))
        })
        .map_err(|f| match f {
            Failure::Fatal(e) => e,
            Failure::Retryable(msg) => Error::ProtocolMismatch(format!("{url} unreachable: {msg}")),
        })?;
        let major = info
            .protocol_version
            .split('.')
            .next()
            .and_then(|m| m.parse::<u32>().ok());
        if major != Some(PROTOCOL_MAJOR) {
            return Err(Error::ProtocolMismatch(format!(
                "server speaks protocol {}, client speaks {PROTOCOL_MAJOR}",
                info.protocol_version
            )));
        }
        if !info.deterministic {
            return Err(Error::ProtocolMismatch(format!(
                "server {} does not declare deterministic scoring",
                info.model_id
            )));
        }
        let cache = match &config.cache_dir {
            Some(dir) => DiskCache::open(dir, &info.model_id, &info.protocol_version)?,
            None => DiskCache::in_memory(),
        };
        Ok(Self {
            config,
            info,
            agent,
            cache,
            requests: AtomicU64::new(0),
        })
    }

    pub fn info(&self) -> &RemoteInfo {
        &self.info
    }

    pub fn cache(&self) -> &DiskCache {
        &self.cache
    }

    /// HTTP requests issued so far (including retries).
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Scores `ctx` twice, bypassing the cache, and requires identical results.
    pub fn probe_determinism(&self, ctx: &BimodalContext) -> Result<f64> {
        let a = self.score_one(ctx)?;
        let b = self.score_one(ctx)?;
        if a.to_bits() != b.to_bits() {
            return Err(Error::oracle(ctx, format!("determinism probe failed: {a} then {b}")));
        }
        Ok(a)
    }

    fn post(&self, path: &str, body: &impl Serialize) -> std::result::Result<Value, Failure> {
        let url = format!("{}{path}", self.config.endpoint);
        with_retries(&self.config, || {
            self.requests.fetch_add(1, Ordering::Relaxed);
            let mut resp = self
                .agent
                .post(&url)
                .send_json(body)
                .map_err(|e| Failure::Retryable(e.to_string()))?;
            check_status(resp.status().as_u16())?;
            resp.body_mut()
                .read_json::<Value>()
                .map_err(|e| Failure::Fatal(Error::ProtocolMismatch(format!("{path}: {e}"))))
        })
    }

    fn score_one(&self, ctx: &BimodalContext) -> Result<f64> {
        let body = self
            .post("/score", &ScoreRequest::from(ctx))
            .map_err(|f| into_error(f, ctx))?;
        let score = body
            .get("score")
            .ok_or_else(|| Error::ProtocolMismatch("/score response lacks \"score\"".into()))?;
        finite_score(score, ctx)
    }

    fn score_chunk(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        let items: Vec<ScoreRequest> = ctxs.iter().map(ScoreRequest::from).collect();
        let body = self
            .post("/score_batch", &BatchRequest { items: &items })
            .map_err(|f| into_error(f, &ctxs[0]))?;
        let scores = body
            .get("scores")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::ProtocolMismatch("/score_batch response lacks \"scores\"".into()))?;
        if scores.len() != ctxs.len() {
            return Err(Error::ProtocolMismatch(format!(
                "/score_batch returned {} scores for {} items",
                scores.len(),
                ctxs.len()
            )));
        }
        scores.iter().zip(ctxs).map(|(s, ctx)| finite_score(s, ctx)).collect()
    }
}

fn check_status(status: u16) -> std::result::Result<(), Failure> {
    match status {
        200..=299 => Ok(()),
        500..=599 => Err(Failure::Retryable(format!("HTTP {status}"))),
        _ => Err(Failure::Fatal(Error::ProtocolMismatch(format!("HTTP {status}")))),
    }
}

fn with_retries<T>(
    config: &RemoteConfig,
    mut call: impl FnMut() -> std::result::Result<T, Failure>,
) -> std::result::Result<T, Failure> {
    let attempts = config.attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        match call() {
            Ok(v) => return Ok(v),
            Err(Failure::Fatal(e)) => return Err(Failure::Fatal(e)),
            Err(Failure::Retryable(msg)) => {
                last = msg;
                if attempt + 1 < attempts {
                    std::thread::sleep(config.backoff_base * 2u32.pow(attempt));
                }
            }
        }
    }
    Err(Failure::Retryable(format!("{last} (after {attempts} attempts)")))
}

fn into_error(f: Failure, ctx: &BimodalContext) -> Error {
    match f {
        Failure::Fatal(Error::ProtocolMismatch(msg)) if msg.starts_with("HTTP 4") => Error::oracle(ctx, msg),
        Failure::Fatal(e) => e,
        Failure::Retryable(msg) => Error::oracle(ctx, msg),
    }
}

fn finite_score(v: &Value, ctx: &BimodalContext) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(Error::oracle(ctx, format!("non-finite score payload {v}"))),
    }
}

impl GameOracle for RemoteOracle {
    fn metadata(&self) -> OracleMetadata {
        let mut m = OracleMetadata::new(self.info.model_id.clone(), self.info.protocol_version.clone());
        for (k, v) in &self.info.extra {
            let v = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
            m.extra.insert(k.clone(), v);
        }
        m
    }

    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        if let Some(v) = self.cache.get(ctx) {
            return Ok(v);
        }
        let v = self.score_one(ctx)?;
        self.cache.store(&[(ctx, v)])?;
        Ok(v)
    }

    fn evaluate_batch(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        let mut out: Vec<Option<f64>> = ctxs.iter().map(|c| self.cache.get(c)).collect();
        let missing: Vec<usize> = (0..ctxs.len()).filter(|&i| out[i].is_none()).collect();
        if missing.is_empty() {
            return Ok(out.into_iter().map(|v| v.expect("all cached")).collect());
        }
        let chunks: Vec<&[usize]> = missing.chunks(self.config.batch_size.max(1)).collect();
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<Vec<f64>>>>> = Mutex::new((0..chunks.len()).map(|_| None).collect());
        let workers = self.config.max_in_flight.clamp(1, chunks.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= chunks.len() {
                        break;
                    }
                    let batch: Vec<BimodalContext> = chunks[k].iter().map(|&i| ctxs[i].clone()).collect();
                    let r = self.score_chunk(&batch);
                    if let Ok(scores) = &r {
                        let items: Vec<(&BimodalContext, f64)> = batch.iter().zip(scores.iter().copied()).collect();
                        if let Err(e) = self.cache.store(&items) {
                            log::warn!("failed to persist scores: {e}");
                        }
                    }
                    results.lock().expect("results poisoned")[k] = Some(r);
                });
            }
        });
        for (chunk, r) in chunks.iter().zip(results.into_inner().expect("results poisoned")) {
            let scores = r.expect("every chunk ran")?;
            for (&i, v) in chunk.iter().zip(scores) {
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }
}

pub fn remote_eval(oracle: &RemoteOracle, ctx: &BimodalContext) -> Result<f64> {
    oracle.evaluate(ctx)
}
