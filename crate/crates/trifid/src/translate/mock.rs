//! Offline backends: deterministic stand-ins for tests, demos and smoke runs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::backend::{Backend, BackendError, BackendRequest, BackendResponse};
use crate::extract::extract_urls;

/// Returns the source text unchanged: a perfect translator by construction.
pub struct IdentityBackend;

impl Backend for IdentityBackend {
    fn id(&self) -> &str {
        "identity"
    }

    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        Ok(BackendResponse {
            translated_text: request.source_text.clone(),
            meta: Some("identity".into()),
        })
    }
}

/// Returns the source text with every prose URL removed; code blocks and all
/// other structure survive. Useful as a worst-case link-dropping translator.
pub struct DropLinksBackend;

impl Backend for DropLinksBackend {
    fn id(&self) -> &str {
        "drop-links"
    }

    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let mut text = request.source_text.clone();
        // Longest first, so one URL being a prefix of another cannot leave
        // mangled remnants behind.
        let mut urls: Vec<String> = extract_urls(&text).into_iter().collect();
        urls.sort_by_key(|u| std::cmp::Reverse(u.len()));
        for url in urls {
            text = text.replace(&url, "");
        }
        Ok(BackendResponse {
            translated_text: text,
            meta: Some("drop-links".into()),
        })
    }
}

/// Always fails with a chosen error kind.
pub struct FailingBackend {
    error: BackendError,
}

impl FailingBackend {
    pub fn transport() -> Self {
        FailingBackend {
            error: BackendError::Transport("synthetic failure".into()),
        }
    }

    pub fn timeout() -> Self {
        FailingBackend {
            error: BackendError::Timeout(Duration::from_millis(1)),
        }
    }

    /// Succeeds at the transport level but with an empty translation.
    pub fn empty() -> Self {
        FailingBackend {
            error: BackendError::EmptyResponse,
        }
    }
}

impl Backend for FailingBackend {
    fn id(&self) -> &str {
        "failing"
    }

    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        if matches!(self.error, BackendError::EmptyResponse) {
            let _ = request;
            return Ok(BackendResponse {
                translated_text: "   ".into(),
                meta: None,
            });
        }
        Err(self.error.clone())
    }
}

/// Fails the first `n` calls with a transport error, then behaves like
/// [`IdentityBackend`].
pub struct FlakyBackend {
    remaining_failures: AtomicUsize,
}

impl FlakyBackend {
    pub fn failing_times(n: usize) -> Self {
        FlakyBackend {
            remaining_failures: AtomicUsize::new(n),
        }
    }
}

impl Backend for FlakyBackend {
    fn id(&self) -> &str {
        "flaky"
    }

    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let remaining = self.remaining_failures.load(Ordering::SeqCst);
        if remaining > 0 {
            self.remaining_failures.store(remaining - 1, Ordering::SeqCst);
            return Err(BackendError::Transport("flaky failure".into()));
        }
        IdentityBackend.run(request)
    }
}

/// Wraps another backend and counts how often it is actually invoked.
pub struct CountingBackend<B> {
    inner: B,
    calls: Arc<AtomicUsize>,
}

impl<B: Backend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend {
            inner,
            calls: Arc::new(AtomicUsize::new(0)),
        }
    }

    /// Shared call counter; clone it before handing the backend away.
    pub fn calls(&self) -> Arc<AtomicUsize> {
        Arc::clone(&self.calls)
    }
}

impl<B: Backend> Backend for CountingBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.run(request)
    }
}
