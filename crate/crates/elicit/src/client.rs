//! OpenAI-style chat-completions client with retry and rate limiting.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{SecondsFormat, Utc};
use elicit_core::taxonomy::render_text;
use elicit_core::{
    GenerationRecord, LanguageConfig, ModelConfig, PromptInstance, SamplingParams, TaskType,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClientError {
    #[error("environment variable `{0}` (API key) is not set")]
    MissingApiKey(String),
    #[error("system prompt for `{model_id}`: placeholder `{{{placeholder}}}` cannot be resolved")]
    SystemPrompt {
        model_id: String,
        placeholder: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Wire body of a chat-completions request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatBody {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

/// Bookkeeping carried alongside a request; never sent on the wire.
#[derive(Clone, Debug, PartialEq)]
pub struct RequestMeta {
    pub output_id: String,
    pub prompt_id: String,
    pub model_id: String,
    pub language: String,
    pub task_type: TaskType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest {
    pub url: String,
    pub api_key: Option<String>,
    pub body: ChatBody,
    pub meta: RequestMeta,
}

impl ChatRequest {
    pub fn output_id(&self) -> &str {
        &self.meta.output_id
    }

    pub fn system_prompt(&self) -> &str {
        self.message("system")
    }

    pub fn user_prompt(&self) -> &str {
        self.message("user")
    }

    fn message(&self, role: &str) -> &str {
        self.body
            .messages
            .iter()
            .find(|m| m.role == role)
            .map_or("", |m| m.content.as_str())
    }

    pub fn sampling(&self) -> SamplingParams {
        SamplingParams {
            temperature: self.body.temperature,
            top_p: self.body.top_p,
            max_output_tokens: self.body.max_tokens,
        }
    }
}

/// How the API key is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Auth {
    /// Read the variable named by `ModelConfig::api_key_env_var`.
    Env,
    /// No key (mock backends).
    None,
}

pub fn build_request(
    instance: &PromptInstance,
    model: &ModelConfig,
    lang: &LanguageConfig,
    auth: Auth,
) -> Result<ChatRequest, ClientError> {
    build_request_with(instance, model, lang, auth, |var| std::env::var(var).ok())
}

/// As [`build_request`], with an explicit environment lookup.
pub fn build_request_with(
    instance: &PromptInstance,
    model: &ModelConfig,
    lang: &LanguageConfig,
    auth: Auth,
    env: impl Fn(&str) -> Option<String>,
) -> Result<ChatRequest, ClientError> {
    let api_key = match auth {
        Auth::Env => Some(
            env(&model.api_key_env_var)
                .filter(|k| !k.is_empty())
                .ok_or_else(|| ClientError::MissingApiKey(model.api_key_env_var.clone()))?,
        ),
        Auth::None => None,
    };
    let system = render_text(&model.system_prompt_template, lang).map_err(|placeholder| {
        ClientError::SystemPrompt {
            model_id: model.model_id.clone(),
            placeholder,
        }
    })?;
    Ok(ChatRequest {
        url: model.endpoint_url.clone(),
        api_key,
        body: ChatBody {
            model: model.model_id.clone(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: system,
                },
                ChatMessage {
                    role: "user".into(),
                    content: instance.rendered_text.clone(),
                },
            ],
            temperature: model.temperature,
            top_p: model.top_p,
            max_tokens: model.max_output_tokens,
        },
        meta: RequestMeta {
            output_id: elicit_core::output_id(
                &model.model_id,
                &lang.iso_code,
                instance.task_type,
                &instance.template_id,
            ),
            prompt_id: instance.template_id.clone(),
            model_id: model.model_id.clone(),
            language: lang.iso_code.clone(),
            task_type: instance.task_type,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("transport error: {0}")]
pub struct TransportError(pub String);

/// Something that can deliver a chat request. `attempt` starts at 1.
pub trait ChatBackend: Send + Sync {
    fn send(&self, request: &ChatRequest, attempt: u32) -> Result<HttpReply, TransportError>;
}

pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

impl ChatBackend for HttpBackend {
    fn send(&self, request: &ChatRequest, _attempt: u32) -> Result<HttpReply, TransportError> {
        let body = serde_json::to_string(&request.body).map_err(|e| TransportError(e.to_string()))?;
        let mut builder = self
            .client
            .post(&request.url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body);
        if let Some(key) = &request.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| TransportError(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

/// Spaces requests to the same endpoint URL by a minimum interval.
pub struct RateLimited<B> {
    inner: B,
    intervals: HashMap<String, Duration>,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl<B: ChatBackend> RateLimited<B> {
    pub fn new(inner: B, intervals: HashMap<String, Duration>) -> Self {
        Self {
            inner,
            intervals,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn wait_turn(&self, url: &str) {
        let interval = self.intervals.get(url).copied().unwrap_or_default();
        if interval.is_zero() {
            return;
        }
        let slot = {
            let mut next = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = next.get(url).copied().map_or(now, |t| t.max(now));
            next.insert(url.to_string(), slot + interval);
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

impl<B: ChatBackend> ChatBackend for RateLimited<B> {
    fn send(&self, request: &ChatRequest, attempt: u32) -> Result<HttpReply, TransportError> {
        self.wait_turn(&request.url);
        self.inner.send(request, attempt)
    }
}

/// Exponential backoff with full jitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub factor: f64,
    pub max_delay: Duration,
    pub seed: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            max_delay: Duration::from_secs(60),
            seed: 0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based): uniform in
    /// `[0, min(max_delay, base·factor^(retry-1))]`.
    pub fn delay(&self, retry: u32, rng: &mut impl Rng) -> Duration {
        let cap = self.base_delay.as_secs_f64() * self.factor.powi(retry.saturating_sub(1) as i32);
        let cap = cap.min(self.max_delay.as_secs_f64());
        if cap <= 0.0 {
            return Duration::ZERO;
        }
        Duration::from_secs_f64(rng.gen_range(0.0..=cap))
    }

    /// Jitter stream for one output, independent of scheduling order.
    pub fn rng_for(&self, output_id: &str) -> ChaCha8Rng {
        // FNV-1a
        let hash = output_id
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ hash)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExecError {
    #[error("{output_id}: permanent failure{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Permanent {
        output_id: String,
        status: Option<u16>,
        message: String,
    },
    #[error("{output_id}: gave up after {attempts} attempts: {message}")]
    Exhausted {
        output_id: String,
        attempts: u32,
        message: String,
    },
}

impl ExecError {
    pub fn output_id(&self) -> &str {
        match self {
            ExecError::Permanent { output_id, .. } | ExecError::Exhausted { output_id, .. } => {
                output_id
            }
        }
    }
}

fn is_retryable(status: u16) -> bool {
    status == 429 || status == 408 || (500..600).contains(&status)
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Extracts `(content, finish_reason)` from a chat-completions response body.
pub fn parse_completion(body: &str) -> Result<(String, String), String> {
    let completion: Completion = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let choice = completion
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| "response has no choices".to_string())?;
    Ok((
        choice.message.content.unwrap_or_default(),
        choice.finish_reason.unwrap_or_else(|| "unknown".into()),
    ))
}

fn truncate(s: &str) -> String {
    s.chars().take(200).collect()
}

/// Sends `request`, retrying 429, 408, 5xx and transport failures.
pub fn execute(
    request: &ChatRequest,
    policy: &RetryPolicy,
    backend: &dyn ChatBackend,
) -> Result<GenerationRecord, ExecError> {
    let output_id = request.output_id().to_string();
    let mut rng = policy.rng_for(&output_id);
    let request_timestamp = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let started = Instant::now();
    let mut last_error = String::new();

    for attempt in 1..=policy.max_retries + 1 {
        match backend.send(request, attempt) {
            Ok(reply) if (200..300).contains(&reply.status) => {
                let (response_text, finish_reason) =
                    parse_completion(&reply.body).map_err(|message| ExecError::Permanent {
                        output_id: output_id.clone(),
                        status: Some(reply.status),
                        message: format!("malformed response: {message}"),
                    })?;
                return Ok(GenerationRecord {
                    output_id,
                    prompt_id: request.meta.prompt_id.clone(),
                    model_id: request.meta.model_id.clone(),
                    language: request.meta.language.clone(),
                    task_type: request.meta.task_type,
                    rendered_prompt: request.user_prompt().to_string(),
                    system_prompt: request.system_prompt().to_string(),
                    sampling: request.sampling(),
                    response_text,
                    finish_reason,
                    request_timestamp,
                    latency_ms: started.elapsed().as_millis() as u64,
                    attempt_count: attempt,
                });
            }
            Ok(reply) if is_retryable(reply.status) => {
                last_error = format!("HTTP {}: {}", reply.status, truncate(&reply.body));
            }
            Ok(reply) => {
                return Err(ExecError::Permanent {
                    output_id,
                    status: Some(reply.status),
                    message: truncate(&reply.body),
                });
            }
            Err(e) => last_error = e.to_string(),
        }
        if attempt <= policy.max_retries {
            let delay = policy.delay(attempt, &mut rng);
            log::debug!("{output_id}: attempt {attempt} failed ({last_error}); retrying in {delay:?}");
            std::thread::sleep(delay);
        }
    }
    Err(ExecError::Exhausted {
        output_id,
        attempts: policy.max_retries + 1,
        message: last_error,
    })
}
