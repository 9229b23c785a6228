//! Chat-completions wire format and backends.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::LlmAgentConfig;
use super::mock::{MockScript, ScriptedBackend};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub messages: Vec<ChatMessage>,
    /// Endpoint-specific fields, sent at the top level of the body.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ChatRequest {
    pub fn new(cfg: &LlmAgentConfig, messages: Vec<ChatMessage>, seed: Option<u64>) -> Self {
        Self {
            model: cfg.model.clone(),
            temperature: cfg.temperature,
            seed,
            messages,
            extra: cfg.reasoning_toggle.clone().unwrap_or_default(),
        }
    }

    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    pub fn system(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
    }
}

/// Anything that can answer a chat request with the assistant's text.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

/// Pull `choices[0].message.content` out of a response body.
pub fn response_content(body: &str) -> Result<String> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| Error::parse(format!("response body is not JSON: {e}"), body))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::parse("response lacks choices[0].message.content", body))
}

/// Token bucket shared by every client of one endpoint.
pub struct RateLimiter {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> Self {
        let capacity = requests_per_second.max(1.0);
        Self {
            rate: requests_per_second,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Shared limiter for `endpoint`; the first registration fixes the rate.
    pub fn for_endpoint(endpoint: &str, requests_per_second: f64) -> Arc<Self> {
        static REGISTRY: OnceLock<Mutex<HashMap<String, Arc<RateLimiter>>>> = OnceLock::new();
        let mut map = REGISTRY.get_or_init(Default::default).lock().expect("limiter registry");
        map.entry(endpoint.to_string())
            .or_insert_with(|| Arc::new(RateLimiter::new(requests_per_second)))
            .clone()
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("limiter state");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.rate).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                (1.0 - *tokens) / self.rate
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Blocking HTTP client with bounded exponential backoff.
pub struct HttpBackend {
    url: String,
    agent: ureq::Agent,
    api_key: Option<String>,
    attempts: u32,
    backoff: Duration,
    limiter: Option<Arc<RateLimiter>>,
}

impl HttpBackend {
    pub fn new(cfg: &LlmAgentConfig) -> Result<Self> {
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!("environment variable {var} (api_key_env) is not set"))
            })?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .http_status_as_error(false)
            // close connections after each response
            .max_idle_connections_per_host(0)
            .build()
            .into();
        Ok(Self {
            url: cfg.endpoint.clone(),
            agent,
            api_key,
            attempts: cfg.max_retries.max(1),
            backoff: Duration::from_millis(500),
            limiter: cfg
                .requests_per_second
                .map(|rps| RateLimiter::for_endpoint(&cfg.endpoint, rps)),
        })
    }

    /// Base delay before the first retry; doubles on every further attempt.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    fn attempt(&self, request: &ChatRequest) -> std::result::Result<String, (bool, Error)> {
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call
            .send_json(request)
            .map_err(|e| (true, Error::Transport(format!("{}: {e}", self.url))))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| (true, Error::Transport(format!("reading response: {e}"))))?;
        if status == 429 || status >= 500 {
            return Err((true, Error::Transport(format!("HTTP {status}: {}", truncate(&body)))));
        }
        if status >= 400 {
            return Err((false, Error::Transport(format!("HTTP {status}: {}", truncate(&body)))));
        }
        response_content(&body).map_err(|e| (false, e))
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(200).collect()
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let mut delay = self.backoff;
        let mut attempt = 1;
        loop {
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err((retryable, err)) if retryable && attempt < self.attempts => {
                    log::warn!("attempt {attempt} failed ({err}); retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err((_, err)) => return Err(err),
            }
        }
    }
}

/// Backend for an agent's endpoint; `mock:<path>` loads a local script.
pub fn backend_for(cfg: &LlmAgentConfig) -> Result<Arc<dyn ChatBackend>> {
    if let Some(path) = cfg.endpoint.strip_prefix("mock:") {
        let script = MockScript::load(path.trim_start_matches("//"))?;
        return Ok(Arc::new(ScriptedBackend::new(script)));
    }
    if cfg.endpoint.starts_with("http://") || cfg.endpoint.starts_with("https://") {
        return Ok(Arc::new(HttpBackend::new(cfg)?));
    }
    Err(Error::Config(format!(
        "endpoint must be an http(s) URL or mock:<script>, got {}",
        cfg.endpoint
    )))
}
