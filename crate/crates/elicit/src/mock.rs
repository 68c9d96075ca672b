//! Offline chat backend that replays canned responses.
//!
//! A fixture file is a JSON object mapping output ids to
//! `{"response_text": ..., "status_schedule": [429, 200], "finish_reason": ...}`.
//! Attempt `k` answers with `status_schedule[k-1]`, or 200 past the end of
//! the schedule. Output ids without a fixture answer 404.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::client::{ChatBackend, ChatRequest, HttpReply, TransportError};
use crate::config::{read_to_string, ConfigError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockFixture {
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub status_schedule: Vec<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallLogEntry {
    pub output_id: String,
    pub attempt: u32,
    pub status: u16,
}

#[derive(Debug, Default)]
pub struct MockBackend {
    fixtures: BTreeMap<String, MockFixture>,
    delay: Duration,
    log: Mutex<Vec<CallLogEntry>>,
    log_file: Option<PathBuf>,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
}

impl MockBackend {
    pub fn new(fixtures: BTreeMap<String, MockFixture>) -> Self {
        Self {
            fixtures,
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read_to_string(path)?;
        let fixtures = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Ok(Self::new(fixtures))
    }

    /// Sleep this long inside every call.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Also append each call as a JSON line to `path`.
    pub fn with_log_file(mut self, path: PathBuf) -> Self {
        self.log_file = Some(path);
        self
    }

    pub fn fixtures(&self) -> &BTreeMap<String, MockFixture> {
        &self.fixtures
    }

    pub fn call_log(&self) -> Vec<CallLogEntry> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Highest number of calls observed in progress at once.
    pub fn max_concurrency(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    fn reply(&self, output_id: &str, attempt: u32) -> HttpReply {
        let Some(fixture) = self.fixtures.get(output_id) else {
            return HttpReply {
                status: 404,
                body: format!(r#"{{"error":{{"message":"no fixture for {output_id}"}}}}"#),
            };
        };
        let status = fixture
            .status_schedule
            .get(attempt as usize - 1)
            .copied()
            .unwrap_or(200);
        let body = if (200..300).contains(&status) {
            serde_json::json!({
                "object": "chat.completion",
                "choices": [{
                    "index": 0,
                    "message": {"role": "assistant", "content": fixture.response_text},
                    "finish_reason": fixture.finish_reason.as_deref().unwrap_or("stop"),
                }],
            })
            .to_string()
        } else {
            format!(r#"{{"error":{{"message":"scheduled status {status}"}}}}"#)
        };
        HttpReply { status, body }
    }

    fn record(&self, entry: CallLogEntry) {
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(path) = &self.log_file {
            // one write per line, under the lock, so concurrent calls never interleave
            let mut line = serde_json::to_string(&entry).expect("serializable entry");
            line.push('\n');
            let appended = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| f.write_all(line.as_bytes()));
            if let Err(e) = appended {
                log::warn!("{}: cannot append mock log: {e}", path.display());
            }
        }
        log.push(entry);
    }
}

impl ChatBackend for MockBackend {
    fn send(&self, request: &ChatRequest, attempt: u32) -> Result<HttpReply, TransportError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let reply = self.reply(request.output_id(), attempt.max(1));
        self.record(CallLogEntry {
            output_id: request.output_id().to_string(),
            attempt,
            status: reply.status,
        });
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        Ok(reply)
    }
}

/// Reads a call log written with [`MockBackend::with_log_file`].
pub fn read_call_log(path: &Path) -> Result<Vec<CallLogEntry>, ConfigError> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}
