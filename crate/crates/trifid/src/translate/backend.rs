//! Backend contract plus the two production transports: a subprocess speaking
//! JSON on stdin/stdout and an HTTP POST endpoint.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Request sent to every backend, as JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub prompt: String,
    pub source_text: String,
    pub source_lang: String,
    pub target_lang: String,
}

/// Response expected from every backend, as JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub translated_text: String,
    #[serde(default)]
    pub meta: Option<String>,
}

#[derive(Debug, Clone, Error)]
pub enum BackendError {
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend returned an empty translation")]
    EmptyResponse,
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// A translation engine. Implementations must be safe to call from several
/// worker threads at once.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;
}

/// Spawns a command per job, writes the request JSON to its stdin and parses
/// the response JSON from its stdout.
pub struct SubprocessBackend {
    command: Vec<String>,
    timeout: Duration,
    id: String,
}

impl SubprocessBackend {
    /// `command` is the program followed by its arguments.
    pub fn new(command: Vec<String>) -> Self {
        let id = format!("cmd:{}", command.first().map(String::as_str).unwrap_or(""));
        SubprocessBackend {
            command,
            timeout: Duration::from_secs(120),
            id,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Backend for SubprocessBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| BackendError::Protocol("empty backend command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| BackendError::Transport(format!("cannot spawn {program}: {e}")))?;

        let mut stdout = child.stdout.take().expect("stdout piped");
        let mut stderr = child.stderr.take().expect("stderr piped");
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let mut out = Vec::new();
            let mut err = Vec::new();
            let read_out = stdout.read_to_end(&mut out);
            let _ = stderr.read_to_end(&mut err);
            let _ = tx.send((read_out, out, err));
        });

        // Reader is already draining stdout, so a chatty child cannot
        // deadlock against this write.
        let payload = serde_json::to_vec(request).expect("request serializes");
        child
            .stdin
            .take()
            .expect("stdin piped")
            .write_all(&payload)
            .map_err(|e| BackendError::Transport(format!("writing request: {e}")))?;

        let (read_result, out, err) = match rx.recv_timeout(self.timeout) {
            Ok(v) => v,
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(BackendError::Timeout(self.timeout));
            }
        };
        read_result.map_err(|e| BackendError::Transport(format!("reading response: {e}")))?;
        let status = child
            .wait()
            .map_err(|e| BackendError::Transport(format!("waiting for backend: {e}")))?;
        if !status.success() {
            let stderr_text = String::from_utf8_lossy(&err);
            return Err(BackendError::Transport(format!(
                "backend exited with {status}: {}",
                stderr_text.trim()
            )));
        }
        serde_json::from_slice(&out)
            .map_err(|e| BackendError::Protocol(format!("invalid response JSON: {e}")))
    }
}

/// POSTs the request JSON to an endpoint and parses the response JSON.
pub struct HttpBackend {
    endpoint: String,
    client: reqwest::blocking::Client,
    timeout: Duration,
    id: String,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>) -> Result<Self, BackendError> {
        Self::with_timeout(endpoint, Duration::from_secs(120))
    }

    pub fn with_timeout(
        endpoint: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let endpoint = endpoint.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(format!("building HTTP client: {e}")))?;
        let id = format!("http:{endpoint}");
        Ok(HttpBackend {
            endpoint,
            client,
            timeout,
            id,
        })
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(request)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout(self.timeout)
                } else {
                    BackendError::Transport(e.to_string())
                }
            })?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Protocol(format!(
                "endpoint returned {status}"
            )));
        }
        response
            .json()
            .map_err(|e| BackendError::Protocol(format!("invalid response JSON: {e}")))
    }
}
