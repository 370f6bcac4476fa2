//! Paginated API client: rate-limited, retrying, resumable fetches into
//! append-only JSONL snapshots with id indexes and per-journal checkpoints.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::PeriodWindow;

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    /// Injected as the `x-api-key` header when present.
    pub api_key: Option<String>,
    pub requests_per_second: f64,
    pub page_size: u32,
    pub max_retries: u32,
    pub out_dir: PathBuf,
}

impl FetchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.requests_per_second > 0.0) {
            return Err(Error::usage("requests_per_second must be positive"));
        }
        if !(1..=200).contains(&self.page_size) {
            return Err(Error::usage("page_size must be between 1 and 200"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchCheckpoint {
    pub journal_id: String,
    pub period_id: String,
    /// Cursor of the next page to request; `None` is the terminal sentinel.
    pub last_cursor: Option<String>,
    pub records_written: u64,
    pub completed: bool,
}

/// One page of API results.
#[derive(Debug, Clone, Deserialize)]
pub struct Page {
    pub results: Vec<serde_json::Value>,
    #[serde(default)]
    pub meta: PageMeta,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PageMeta {
    pub next_cursor: Option<String>,
}

/// Map an HTTP status to the client's error taxonomy: 429 and 5xx are
/// retryable, any other 4xx is a hard request error.
pub fn classify_status(status: u16, context: &str) -> Error {
    if status == 429 || (500..600).contains(&status) {
        Error::Network(format!("http {status} ({context})"))
    } else {
        Error::data(format!("http {status} ({context})"))
    }
}

pub trait ApiTransport {
    fn get(&mut self, path: &str, query: &[(String, String)]) -> Result<Page>;
}

/// Blocking HTTP transport against the configured base URL.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(config: &FetchConfig) -> HttpTransport {
        HttpTransport {
            client: reqwest::blocking::Client::new(),
            base_url: config.base_url.trim_end_matches('/').to_string(),
            api_key: config.api_key.clone(),
        }
    }
}

impl ApiTransport for HttpTransport {
    fn get(&mut self, path: &str, query: &[(String, String)]) -> Result<Page> {
        let url = format!("{}/{path}", self.base_url);
        let mut req = self.client.get(&url).query(query);
        if let Some(key) = &self.api_key {
            req = req.header("x-api-key", key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::Network(format!("GET {url}: {e}")))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(classify_status(status, &format!("GET {url}")));
        }
        resp.json()
            .map_err(|e| Error::data(format!("bad page from {url}: {e}")))
    }
}

/// In-memory transport for tests: cursor-addressed pages, scripted status
/// failures, and a kill switch that fails every request past a budget.
pub struct MockTransport {
    pages: std::collections::BTreeMap<String, Page>,
    pub scripted_failures: std::collections::VecDeque<u16>,
    pub kill_after: Option<usize>,
    pub requests: Vec<(String, Vec<(String, String)>)>,
}

/// Cursor that starts a pagination walk.
pub const START_CURSOR: &str = "*";

impl MockTransport {
    /// Serve `records` split into pages of `per_page`, chained with cursors
    /// c1, c2, ...
    pub fn paged(records: Vec<serde_json::Value>, per_page: usize) -> MockTransport {
        let chunks: Vec<Vec<serde_json::Value>> = if records.is_empty() {
            vec![Vec::new()]
        } else {
            records.chunks(per_page).map(|c| c.to_vec()).collect()
        };
        let n = chunks.len();
        let mut pages = std::collections::BTreeMap::new();
        for (i, chunk) in chunks.into_iter().enumerate() {
            let cursor = if i == 0 {
                START_CURSOR.to_string()
            } else {
                format!("c{i}")
            };
            let next = (i + 1 < n).then(|| format!("c{}", i + 1));
            pages.insert(
                cursor,
                Page {
                    results: chunk,
                    meta: PageMeta { next_cursor: next },
                },
            );
        }
        MockTransport {
            pages,
            scripted_failures: Default::default(),
            kill_after: None,
            requests: Vec::new(),
        }
    }
}

impl ApiTransport for MockTransport {
    fn get(&mut self, path: &str, query: &[(String, String)]) -> Result<Page> {
        if let Some(budget) = self.kill_after {
            if self.requests.len() >= budget {
                return Err(Error::Network("connection killed".to_string()));
            }
        }
        self.requests.push((path.to_string(), query.to_vec()));
        if let Some(status) = self.scripted_failures.pop_front() {
            return Err(classify_status(status, path));
        }
        let cursor = query
            .iter()
            .find(|(k, _)| k == "cursor")
            .map(|(_, v)| v.as_str())
            .unwrap_or(START_CURSOR);
        self.pages
            .get(cursor)
            .cloned()
            .ok_or_else(|| Error::data(format!("mock has no page for cursor '{cursor}'")))
    }
}

/// Minimum-interval pacer. `reserve` returns how long the caller must wait
/// before issuing the next request at `now`.
pub struct RateLimiter {
    min_interval: Duration,
    next_allowed: Option<Instant>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> RateLimiter {
        RateLimiter {
            min_interval: Duration::from_secs_f64(1.0 / requests_per_second),
            next_allowed: None,
        }
    }

    pub fn reserve(&mut self, now: Instant) -> Duration {
        let wait = match self.next_allowed {
            Some(t) if t > now => t - now,
            _ => Duration::ZERO,
        };
        self.next_allowed = Some(now + wait + self.min_interval);
        wait
    }
}

/// Full-jitter exponential backoff: uniform over (0, min(60 s, 2^attempt s)].
pub fn backoff_delay(attempt: u32, rng: &mut impl Rng) -> Duration {
    let cap = 60.0f64;
    let max = cap.min(2.0f64.powi(attempt.min(10) as i32));
    Duration::from_secs_f64(rng.gen_range(0.0..max))
}

fn read_id_index(path: &Path) -> Result<BTreeSet<String>> {
    if !path.exists() {
        return Ok(BTreeSet::new());
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(|e| Error::io(path, e)))
        .collect()
}

fn append_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    for line in lines {
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn write_atomically(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Filesystem layout of one snapshot directory.
pub struct SnapshotPaths {
    out_dir: PathBuf,
}

impl SnapshotPaths {
    pub fn new(out_dir: impl Into<PathBuf>) -> Result<SnapshotPaths> {
        let out_dir = out_dir.into();
        fs::create_dir_all(out_dir.join("checkpoints"))
            .map_err(|e| Error::io(&out_dir, e))?;
        Ok(SnapshotPaths { out_dir })
    }

    pub fn works_jsonl(&self) -> PathBuf {
        self.out_dir.join("works.jsonl")
    }
    pub fn works_index(&self) -> PathBuf {
        self.out_dir.join("works.idx")
    }
    pub fn metadata_jsonl(&self) -> PathBuf {
        self.out_dir.join("cited_metadata.jsonl")
    }
    pub fn metadata_index(&self) -> PathBuf {
        self.out_dir.join("cited_metadata.idx")
    }
    pub fn misses(&self) -> PathBuf {
        self.out_dir.join("cited_metadata.misses")
    }
    pub fn checkpoint(&self, journal_id: &str, period_id: &str) -> PathBuf {
        self.out_dir
            .join("checkpoints")
            .join(format!("{journal_id}_{period_id}.json"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataReport {
    pub written: u64,
    pub cache_hits: u64,
    pub misses: u64,
}

pub struct FetchClient<T: ApiTransport> {
    config: FetchConfig,
    transport: T,
    limiter: RateLimiter,
    sleeper: Box<dyn FnMut(Duration) + Send>,
    backoff_rng: ChaCha8Rng,
}

impl<T: ApiTransport> FetchClient<T> {
    pub fn new(config: FetchConfig, transport: T) -> Result<FetchClient<T>> {
        Self::with_sleeper(config, transport, Box::new(std::thread::sleep))
    }

    /// Test constructor: the sleeper observes pacing and backoff waits
    /// without actually blocking.
    pub fn with_sleeper(
        config: FetchConfig,
        transport: T,
        sleeper: Box<dyn FnMut(Duration) + Send>,
    ) -> Result<FetchClient<T>> {
        config.validate()?;
        let limiter = RateLimiter::new(config.requests_per_second);
        Ok(FetchClient {
            config,
            transport,
            limiter,
            sleeper,
            backoff_rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn get_with_retry(&mut self, path: &str, query: &[(String, String)]) -> Result<Page> {
        let wait = self.limiter.reserve(Instant::now());
        if !wait.is_zero() {
            (self.sleeper)(wait);
        }
        let mut attempt = 0;
        loop {
            match self.transport.get(path, query) {
                Err(Error::Network(msg)) => {
                    if attempt >= self.config.max_retries {
                        return Err(Error::NetworkExhausted(format!(
                            "{msg} after {attempt} retries"
                        )));
                    }
                    let delay = backoff_delay(attempt, &mut self.backoff_rng);
                    (self.sleeper)(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    /// Fetch every work of one journal within a period window, appending
    /// each record exactly once and checkpointing after every page. Resume
    /// picks up from the stored cursor without re-emitting records.
    pub fn fetch_journal_works(
        &mut self,
        journal_id: &str,
        window: &PeriodWindow,
        paths: &SnapshotPaths,
    ) -> Result<FetchCheckpoint> {
        let cp_path = paths.checkpoint(journal_id, &window.period_id);
        let mut checkpoint = if cp_path.exists() {
            let raw = fs::read_to_string(&cp_path).map_err(|e| Error::io(&cp_path, e))?;
            serde_json::from_str(&raw)
                .map_err(|e| Error::data(format!("bad checkpoint {}: {e}", cp_path.display())))?
        } else {
            FetchCheckpoint {
                journal_id: journal_id.to_string(),
                period_id: window.period_id.clone(),
                last_cursor: Some(START_CURSOR.to_string()),
                records_written: 0,
                completed: false,
            }
        };
        if checkpoint.completed {
            return Ok(checkpoint);
        }
        let mut seen = read_id_index(&paths.works_index())?;
        let filter = format!(
            "journal_id:{journal_id},publication_year:{}-{}",
            window.year_start, window.year_end
        );
        while let Some(cursor) = checkpoint.last_cursor.clone() {
            let query = vec![
                ("filter".to_string(), filter.clone()),
                ("per-page".to_string(), self.config.page_size.to_string()),
                ("cursor".to_string(), cursor),
            ];
            let page = self.get_with_retry("works", &query)?;
            let mut lines = Vec::new();
            let mut ids = Vec::new();
            for record in &page.results {
                let id = record
                    .get("id")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| Error::data("api record without id"))?;
                if seen.insert(id.to_string()) {
                    lines.push(record.to_string());
                    ids.push(id.to_string());
                }
            }
            append_lines(&paths.works_jsonl(), &lines)?;
            append_lines(&paths.works_index(), &ids)?;
            checkpoint.records_written += lines.len() as u64;
            checkpoint.last_cursor = page.meta.next_cursor;
            checkpoint.completed = checkpoint.last_cursor.is_none();
            write_atomically(&cp_path, &serde_json::to_string_pretty(&checkpoint).unwrap())?;
        }
        Ok(checkpoint)
    }

    /// Resolve outlet metadata for a batch of cited work ids. Previously
    /// fetched ids are served from the local snapshot with no network
    /// traffic; unresolvable ids land in the miss sidecar.
    pub fn fetch_referenced_metadata(
        &mut self,
        work_ids: &[String],
        paths: &SnapshotPaths,
    ) -> Result<MetadataReport> {
        if work_ids.is_empty() {
            return Err(Error::usage("empty batch"));
        }
        let mut cached = read_id_index(&paths.metadata_index())?;
        let mut report = MetadataReport {
            written: 0,
            cache_hits: 0,
            misses: 0,
        };
        let mut pending: Vec<&String> = Vec::new();
        for id in work_ids {
            if cached.contains(id) {
                report.cache_hits += 1;
            } else {
                pending.push(id);
            }
        }
        for chunk in pending.chunks(self.config.page_size as usize) {
            let joined: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let query = vec![
                ("filter".to_string(), format!("ids:{}", joined.join("|"))),
                ("per-page".to_string(), self.config.page_size.to_string()),
            ];
            let page = self.get_with_retry("works", &query)?;
            let mut lines = Vec::new();
            let mut ids = Vec::new();
            for record in &page.results {
                let id = record
                    .get("id")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| Error::data("api record without id"))?;
                if cached.insert(id.to_string()) {
                    lines.push(record.to_string());
                    ids.push(id.to_string());
                }
            }
            let resolved: BTreeSet<&str> = ids.iter().map(|s| s.as_str()).collect();
            let missed: Vec<String> = chunk
                .iter()
                .filter(|id| !resolved.contains(id.as_str()) && !cached.contains(id.as_str()))
                .map(|id| id.to_string())
                .collect();
            report.written += lines.len() as u64;
            report.misses += missed.len() as u64;
            append_lines(&paths.metadata_jsonl(), &lines)?;
            append_lines(&paths.metadata_index(), &ids)?;
            append_lines(&paths.misses(), &missed)?;
        }
        Ok(report)
    }
}
