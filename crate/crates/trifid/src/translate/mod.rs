//! Translation pipeline: prompt construction, pluggable backends, on-disk
//! caching, retries and a bounded-concurrency job runner.

mod backend;
mod cache;
pub mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backend::{Backend, BackendError, BackendRequest, BackendResponse, HttpBackend, SubprocessBackend};
pub use cache::{CacheEntry, TranslationCache};

/// The translation instruction sent to every backend, with the language
/// names substituted per job.
pub const PROMPT_TEMPLATE: &str = "You are an expert translator, please translate the following \
Markdown content from {source} to {target}. Preserve code blocks, links and markdown format \
exactly as they are.";

/// Language codes accepted by [`build_prompt`], with the names substituted
/// into the prompt.
pub const LANGUAGES: &[(&str, &str)] = &[
    ("ar", "Arabic"),
    ("cs", "Czech"),
    ("de", "German"),
    ("en", "English"),
    ("es", "Spanish"),
    ("fr", "French"),
    ("hi", "Hindi"),
    ("id", "Indonesian"),
    ("it", "Italian"),
    ("ja", "Japanese"),
    ("ko", "Korean"),
    ("nl", "Dutch"),
    ("pl", "Polish"),
    ("pt", "Portuguese"),
    ("ru", "Russian"),
    ("sv", "Swedish"),
    ("tr", "Turkish"),
    ("uk", "Ukrainian"),
    ("vi", "Vietnamese"),
    ("zh", "Chinese"),
];

#[derive(Debug, Clone, Error)]
pub enum TranslateError {
    #[error("unknown language code {code:?}; known codes: {known}")]
    UnknownLanguage { code: String, known: String },
    #[error("source and target language are both {0:?}; nothing to translate")]
    SameLanguage(String),
    #[error("backend {backend_id} failed after {attempts} attempt(s): {source}")]
    Backend {
        backend_id: String,
        attempts: u32,
        #[source]
        source: BackendError,
    },
    #[error("translation cache: {0}")]
    Cache(String),
}

/// English name for a language code (case-insensitive).
pub fn language_name(code: &str) -> Result<&'static str, TranslateError> {
    let lower = code.to_ascii_lowercase();
    LANGUAGES
        .iter()
        .find(|(c, _)| *c == lower)
        .map(|(_, name)| *name)
        .ok_or_else(|| TranslateError::UnknownLanguage {
            code: code.to_string(),
            known: LANGUAGES
                .iter()
                .map(|(c, _)| *c)
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// Builds the backend prompt for a language pair. The pair must be two
/// distinct known codes.
pub fn build_prompt(source_lang: &str, target_lang: &str) -> Result<String, TranslateError> {
    let source = language_name(source_lang)?;
    let target = language_name(target_lang)?;
    if source_lang.eq_ignore_ascii_case(target_lang) {
        return Err(TranslateError::SameLanguage(source_lang.to_string()));
    }
    Ok(PROMPT_TEMPLATE
        .replace("{source}", source)
        .replace("{target}", target))
}

/// A fully specified unit of translation work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationJob {
    pub source_text: String,
    pub source_lang: String,
    pub target_lang: String,
    pub prompt: String,
    pub backend_id: String,
    /// Hex SHA-256 over prompt, source text and backend id; the cache key.
    pub content_hash: String,
}

impl TranslationJob {
    pub fn new(
        source_text: impl Into<String>,
        source_lang: &str,
        target_lang: &str,
        backend_id: &str,
    ) -> Result<Self, TranslateError> {
        let source_text = source_text.into();
        let prompt = build_prompt(source_lang, target_lang)?;
        let content_hash = content_hash(&prompt, &source_text, backend_id);
        Ok(TranslationJob {
            source_text,
            source_lang: source_lang.to_ascii_lowercase(),
            target_lang: target_lang.to_ascii_lowercase(),
            prompt,
            backend_id: backend_id.to_string(),
            content_hash,
        })
    }
}

/// Hex SHA-256 over the fields that determine a translation output.
pub fn content_hash(prompt: &str, source_text: &str, backend_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    hasher.update(source_text.as_bytes());
    hasher.update(backend_id.as_bytes());
    hex::encode(hasher.finalize())
}

/// What came back for one job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendResult {
    pub translated_text: String,
    /// Wall-clock milliseconds spent obtaining the text (0-ish on cache hits).
    pub latency_ms: u64,
    pub backend_meta: String,
}

/// Retry policy for transient backend failures (timeouts and transport
/// errors). Delays grow exponentially from `base_delay`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    fn delay_before(&self, attempt: u32) -> Duration {
        // attempt is 1-based; no delay before the first try.
        if attempt <= 1 {
            Duration::ZERO
        } else {
            self.base_delay * 2u32.saturating_pow(attempt - 2)
        }
    }
}

/// Tunables around a backend. `Default` matches the documented behavior:
/// 3 attempts, 2 jobs in flight, 100 KiB size warning, fence unwrapping off.
#[derive(Debug, Clone)]
pub struct TranslatorOptions {
    pub retry: RetryPolicy,
    pub concurrency: usize,
    /// Warn (without refusing) when a source document exceeds this size.
    pub size_guard_bytes: usize,
    /// Unwrap a response that arrives wrapped in one outer code fence.
    pub unwrap_fences: bool,
    /// Minimum spacing between calls to the backend, across all workers.
    pub min_request_interval: Option<Duration>,
}

impl Default for TranslatorOptions {
    fn default() -> Self {
        TranslatorOptions {
            retry: RetryPolicy::default(),
            concurrency: 2,
            size_guard_bytes: 100 * 1024,
            unwrap_fences: false,
            min_request_interval: None,
        }
    }
}

/// Runs jobs against one backend with caching, retries and rate limiting.
pub struct Translator {
    backend: Box<dyn Backend>,
    cache: Option<TranslationCache>,
    options: TranslatorOptions,
    last_call: Mutex<Option<Instant>>,
}

impl Translator {
    pub fn new(backend: Box<dyn Backend>) -> Self {
        Translator {
            backend,
            cache: None,
            options: TranslatorOptions::default(),
            last_call: Mutex::new(None),
        }
    }

    pub fn with_cache(mut self, cache: TranslationCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_options(mut self, options: TranslatorOptions) -> Self {
        self.options = options;
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    /// Translates one job: cache lookup, rate-limited backend call with
    /// retries, optional fence unwrapping, cache write-back.
    pub fn translate(&self, job: &TranslationJob) -> Result<BackendResult, TranslateError> {
        if job.source_text.len() > self.options.size_guard_bytes {
            log::warn!(
                "source document is {} bytes (over the {} byte guard); sending unchunked",
                job.source_text.len(),
                self.options.size_guard_bytes
            );
        }

        if let Some(cache) = &self.cache {
            if let Some(entry) = cache
                .get(&job.content_hash)
                .map_err(|e| TranslateError::Cache(e.to_string()))?
            {
                return Ok(BackendResult {
                    translated_text: entry.translated_text,
                    latency_ms: 0,
                    backend_meta: format!("cache:{}", entry.backend_meta),
                });
            }
        }

        let request = BackendRequest {
            prompt: job.prompt.clone(),
            source_text: job.source_text.clone(),
            source_lang: job.source_lang.clone(),
            target_lang: job.target_lang.clone(),
        };

        let started = Instant::now();
        let response = self.call_with_retries(&request)?;
        let latency_ms = started.elapsed().as_millis() as u64;

        let mut translated_text = response.translated_text;
        if translated_text.trim().is_empty() {
            return Err(TranslateError::Backend {
                backend_id: self.backend.id().to_string(),
                attempts: 1,
                source: BackendError::EmptyResponse,
            });
        }
        if self.options.unwrap_fences {
            if let Some(unwrapped) = unwrap_outer_fence(&translated_text) {
                log::info!("response arrived wrapped in a code fence; unwrapping");
                translated_text = unwrapped;
            }
        }

        let backend_meta = response.meta.unwrap_or_default();
        if let Some(cache) = &self.cache {
            cache
                .put(
                    &job.content_hash,
                    &CacheEntry {
                        translated_text: translated_text.clone(),
                        backend_meta: backend_meta.clone(),
                    },
                )
                .map_err(|e| TranslateError::Cache(e.to_string()))?;
        }

        Ok(BackendResult {
            translated_text,
            latency_ms,
            backend_meta,
        })
    }

    fn call_with_retries(&self, request: &BackendRequest) -> Result<BackendResponse, TranslateError> {
        let attempts = self.options.retry.attempts.max(1);
        let mut last_err = None;
        for attempt in 1..=attempts {
            std::thread::sleep(self.options.retry.delay_before(attempt));
            self.respect_rate_limit();
            match self.backend.run(request) {
                Ok(response) => return Ok(response),
                Err(e @ (BackendError::Timeout(_) | BackendError::Transport(_))) => {
                    log::warn!(
                        "backend {} attempt {attempt}/{attempts} failed: {e}",
                        self.backend.id()
                    );
                    last_err = Some(e);
                }
                Err(e) => {
                    return Err(TranslateError::Backend {
                        backend_id: self.backend.id().to_string(),
                        attempts: attempt,
                        source: e,
                    })
                }
            }
        }
        Err(TranslateError::Backend {
            backend_id: self.backend.id().to_string(),
            attempts,
            source: last_err.expect("at least one attempt ran"),
        })
    }

    fn respect_rate_limit(&self) {
        let Some(interval) = self.options.min_request_interval else {
            return;
        };
        let mut last = self.last_call.lock().expect("rate limit lock");
        if let Some(at) = *last {
            let since = at.elapsed();
            if since < interval {
                std::thread::sleep(interval - since);
            }
        }
        *last = Some(Instant::now());
    }

    /// Runs many jobs with at most `options.concurrency` in flight. Jobs
    /// sharing a content hash are collapsed to one backend call. Results come
    /// back in job order.
    pub fn translate_many(
        &self,
        jobs: &[TranslationJob],
    ) -> Vec<Result<BackendResult, TranslateError>> {
        use std::collections::HashMap;

        // First occurrence of each hash does the work; the rest copy it.
        let mut representative: HashMap<&str, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(jobs.len());
        let mut unique = Vec::new();
        for (i, job) in jobs.iter().enumerate() {
            match representative.get(job.content_hash.as_str()) {
                Some(&first) => assignment.push(first),
                None => {
                    representative.insert(&job.content_hash, i);
                    assignment.push(i);
                    unique.push(i);
                }
            }
        }

        let results: Vec<Mutex<Option<Result<BackendResult, TranslateError>>>> =
            jobs.iter().map(|_| Mutex::new(None)).collect();
        let cursor = AtomicUsize::new(0);
        let workers = self.options.concurrency.max(1).min(unique.len().max(1));

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let at = cursor.fetch_add(1, Ordering::SeqCst);
                    let Some(&job_index) = unique.get(at) else {
                        break;
                    };
                    let outcome = self.translate(&jobs[job_index]);
                    *results[job_index].lock().expect("result slot") = Some(outcome);
                });
            }
        });

        assignment
            .into_iter()
            .map(|src| {
                results[src]
                    .lock()
                    .expect("result slot")
                    .as_ref()
                    .expect("worker filled slot")
                    .clone()
            })
            .collect()
    }
}

/// If the whole text is wrapped in exactly one outer fence, returns the
/// interior; otherwise `None`.
fn unwrap_outer_fence(text: &str) -> Option<String> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 2 {
        return None;
    }
    let first_content = lines.iter().position(|l| !l.trim().is_empty())?;
    let (ch, len, _) = crate::extract::opening_fence(lines[first_content])?;
    let mut closer = None;
    for (i, line) in lines.iter().enumerate().skip(first_content + 1) {
        if crate::extract::is_closing_fence(line, ch, len) {
            closer = Some(i);
            break;
        }
    }
    let closer = closer?;
    // The first closer must be the last non-blank line, else the fence only
    // wraps a prefix of the document.
    if lines[closer + 1..].iter().any(|l| !l.trim().is_empty()) {
        return None;
    }
    let mut interior = lines[first_content + 1..closer].join("\n");
    interior.push('\n');
    Some(interior)
}
