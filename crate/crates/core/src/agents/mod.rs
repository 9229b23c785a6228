//! Forecasting agents.
//!
//! An agent answers two kinds of calls: once at the start for the pair of
//! forecasts `(p^e_1, p^e_2)`, then once per period `t >= 2` for `p^e_{t+1}`.

mod scripted;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::{LlmAgentConfig, TranscriptEntry};

pub use scripted::{initial_pair, scripted_forecast, ScriptedAgent, ScriptedForecast};

/// Everything an agent is shown when forecasting at period `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastContext {
    /// Current period; the agent forecasts period `t + 1`.
    pub t: u32,
    /// Realized prices `p_1 ..= p_{t-1}`.
    pub prices: Vec<f64>,
    /// Own forecasts `p^e_1 ..= p^e_t`.
    pub own_predictions: Vec<f64>,
    /// Earnings of period `t - 1`.
    pub last_earnings: f64,
    /// Earnings summed over periods `1 ..= t - 1`.
    pub total_earnings: f64,
    pub cap_known: bool,
    pub guidance_range: [f64; 2],
}

impl ForecastContext {
    pub fn validate(&self) -> Result<()> {
        if self.t < 1 {
            return Err(Error::InvalidInput("periods are numbered from 1".into()));
        }
        if self.prices.len() + 1 != self.t as usize {
            return Err(Error::InvalidInput(format!(
                "period {} needs {} past prices, got {}",
                self.t,
                self.t - 1,
                self.prices.len()
            )));
        }
        if self.own_predictions.len() != self.t as usize {
            return Err(Error::InvalidInput(format!(
                "period {} needs {} own predictions, got {}",
                self.t,
                self.t,
                self.own_predictions.len()
            )));
        }
        Ok(())
    }
}

/// Forecasting rule of an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Always forecasts the fundamental price.
    Fundamentalist,
    /// Forecasts the last observed price.
    Naive,
    /// `p_{t-1} + lambda (p_{t-1} - p_{t-2})`.
    Trend {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    /// `w p_{t-1} + (1 - w) p^e_t`.
    Adaptive { weight: f64 },
    /// Rides the rational bubble `p^f + c R^{t+1}` until it would cross the
    /// cap, then forecasts the fundamental price.
    RationalBubble { c: f64 },
    Llm(LlmAgentConfig),
}

fn default_lambda() -> f64 {
    1.0
}

/// How an agent produces `(p^e_1, p^e_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialPolicy {
    /// Rule-specific: rational-expectations kinds use their own closed form,
    /// heuristics the midpoint of the guidance range.
    #[default]
    Default,
    Fixed([f64; 2]),
    /// Seeded uniform draw from the guidance range.
    Uniform,
}

/// Declarative description of one forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: AgentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialPolicy,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            seed: 0,
            initial: InitialPolicy::Default,
        }
    }

    pub fn is_llm(&self) -> bool {
        matches!(self.kind, AgentKind::Llm(_))
    }

    /// Check parameter ranges; `path` prefixes the field names in messages.
    pub fn validate(&self, path: &str) -> Result<()> {
        match &self.kind {
            AgentKind::Trend { lambda } if !(lambda.is_finite() && *lambda >= 0.0) => Err(
                Error::Config(format!("{path}.kind.trend.lambda must be >= 0, got {lambda}")),
            ),
            AgentKind::Adaptive { weight } if !(0.0..=1.0).contains(weight) => Err(Error::Config(
                format!("{path}.kind.adaptive.weight must be in [0, 1], got {weight}"),
            )),
            AgentKind::RationalBubble { c } if !(c.is_finite() && *c >= 0.0) => Err(
                Error::Config(format!("{path}.kind.rational_bubble.c must be >= 0, got {c}")),
            ),
            AgentKind::Llm(cfg) => cfg.validate(&format!("{path}.kind.llm")),
            _ => Ok(()),
        }?;
        if let InitialPolicy::Fixed(pair) = self.initial {
            if pair.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{path}.initial.fixed must be finite")));
            }
        }
        Ok(())
    }
}

/// A forecast together with its audit trail.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentOutput<T> {
    pub value: T,
    pub justification: String,
    /// Protocol notes such as `cap_clamped`.
    pub flags: Vec<String>,
    pub transcript: Vec<TranscriptEntry>,
    /// Set when the cap was disclosed to the agent during this call.
    pub cap_disclosed: bool,
}

impl<T> AgentOutput<T> {
    pub fn plain(value: T) -> Self {
        Self {
            value,
            justification: String::new(),
            flags: Vec::new(),
            transcript: Vec::new(),
            cap_disclosed: false,
        }
    }
}

/// A stateful forecaster taking part in a market.
pub trait Forecaster: Send {
    fn initial(&mut self) -> Result<AgentOutput<[f64; 2]>>;

    fn forecast(&mut self, ctx: &ForecastContext) -> Result<AgentOutput<f64>>;

    fn cap_known(&self) -> bool;
}
