use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Which step-prompt template an LLM agent receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    #[default]
    Neutral,
    /// Adds the hint to model higher-order trends.
    Nonlinear,
}

/// Settings of one chat-completions backed agent (also used for classifiers
/// and probes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmAgentConfig {
    /// `http(s)://.../chat/completions`, or `mock:<script.json>` for the
    /// in-process scripted backend.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Base seed; when set, each request carries a seed derived from it, the
    /// run seed, the agent index and the period.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Number of own prior exchanges included in each request.
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default)]
    pub prompt_variant: PromptVariant,
    /// Extra request fields merged verbatim into every request body.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_toggle: Option<Map<String, Value>>,
    /// Re-queries allowed after an unparseable or out-of-range reply; also the
    /// number of HTTP attempts per request.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Environment variable holding a bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Shared request budget for this endpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_second: Option<f64>,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_memory() -> usize {
    2
}

fn default_max_retries() -> u32 {
    3
}

fn default_timeout() -> f64 {
    120.0
}

impl LlmAgentConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: default_temperature(),
            seed: None,
            memory: default_memory(),
            prompt_variant: PromptVariant::Neutral,
            reasoning_toggle: None,
            max_retries: default_max_retries(),
            timeout_secs: default_timeout(),
            api_key_env: None,
            requests_per_second: None,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if self.endpoint.trim().is_empty() {
            return Err(Error::Config(format!("{path}.endpoint is empty")));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Config(format!(
                "{path}.temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_retries < 1 {
            return Err(Error::Config(format!("{path}.max_retries must be >= 1")));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(Error::Config(format!("{path}.timeout_secs must be > 0")));
        }
        if let Some(rps) = self.requests_per_second {
            if !(rps.is_finite() && rps > 0.0) {
                return Err(Error::Config(format!("{path}.requests_per_second must be > 0")));
            }
        }
        Ok(())
    }
}
