use serde::{Deserialize, Serialize};

use super::log::TranscriptRecord;
use super::run::build_forecaster;
use crate::agents::{AgentSpec, ForecastContext};
use crate::error::{Error, Result};
use crate::market::{earnings, MarketParams};
use crate::seed::repeat_seed;

/// A frozen market history on which an agent is asked for one forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeScenario {
    /// Realized prices `p_1 ..= p_{t-1}`.
    pub prices: Vec<f64>,
    /// The agent's own forecasts `p^e_1 ..= p^e_t`.
    pub own_predictions: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_repeats() -> u32 {
    5
}

impl Default for ProbeScenario {
    /// A gently convex rising history ending at period 7.
    fn default() -> Self {
        Self {
            prices: vec![53.65, 55.18, 57.52, 60.47, 63.49, 67.47],
            own_predictions: vec![50.0, 50.0, 51.83, 56.71, 61.26, 64.69, 68.06],
            repeats: default_repeats(),
            base_seed: 0,
        }
    }
}

impl ProbeScenario {
    /// Current period of the scenario.
    pub fn t(&self) -> u32 {
        self.own_predictions.len() as u32
    }

    /// Context shown to the agent, with earnings implied by the history.
    pub fn context(&self, params: &MarketParams) -> Result<ForecastContext> {
        if self.repeats < 1 {
            return Err(Error::Config("probe repeats must be >= 1".into()));
        }
        let paid: Vec<f64> = self
            .prices
            .iter()
            .zip(&self.own_predictions)
            .map(|(&p, &f)| earnings(f, p))
            .collect();
        let ctx = ForecastContext {
            t: self.t(),
            prices: self.prices.clone(),
            own_predictions: self.own_predictions.clone(),
            last_earnings: paid.last().copied().unwrap_or(0.0),
            total_earnings: paid.iter().sum(),
            cap_known: false,
            guidance_range: params.guidance_range,
        };
        ctx.validate()
            .map_err(|e| Error::Config(format!("inconsistent probe history: {e}")))?;
        if ctx.t < 2 {
            return Err(Error::Config("probe history must reach period 2".into()));
        }
        Ok(ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRepeat {
    pub repeat: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub justification: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<TranscriptRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub target_period: u32,
    pub repeats: Vec<ProbeRepeat>,
    /// Mean over successful repeats.
    pub mean: Option<f64>,
}

impl ProbeResult {
    pub fn values(&self) -> Vec<f64> {
        self.repeats.iter().filter_map(|r| r.value).collect()
    }
}

/// Ask a fresh instance of `agent` for its forecast on the frozen history,
/// once per repeat.
pub fn run_probe(agent: &AgentSpec, scenario: &ProbeScenario, params: &MarketParams) -> Result<ProbeResult> {
    agent.validate("agent")?;
    let ctx = scenario.context(params)?;
    let mut repeats = Vec::new();
    for r in 0..scenario.repeats {
        let seed = repeat_seed(scenario.base_seed, r);
        let outcome = build_forecaster(agent, params, seed, 0).and_then(|mut f| f.forecast(&ctx));
        repeats.push(match outcome {
            Ok(out) => ProbeRepeat {
                repeat: r,
                value: Some(out.value),
                justification: out.justification,
                error: None,
                transcript: if out.transcript.is_empty() {
                    Vec::new()
                } else {
                    vec![TranscriptRecord { agent: 0, t: ctx.t, entries: out.transcript }]
                },
            },
            Err(e) => ProbeRepeat {
                repeat: r,
                value: None,
                justification: String::new(),
                error: Some(e.to_string()),
                transcript: Vec::new(),
            },
        });
    }
    let values: Vec<f64> = repeats.iter().filter_map(|r| r.value).collect();
    let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
    Ok(ProbeResult { target_period: ctx.t + 1, repeats, mean })
}
