use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, AgentSpec};
use crate::error::{Error, Result};
use crate::market::MarketParams;

/// Version of the experiment-config and run-log formats.
pub const SCHEMA_VERSION: u32 = 1;

/// A full experiment: the economy, the agents in fixed order, and how many
/// seeded repeats to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub market: MarketParams,
    pub agents: Vec<AgentSpec>,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default)]
    pub base_seed: u64,
    /// Directory receiving run logs and the campaign manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    /// Repeats executed in parallel; defaults to the number of CPUs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

fn default_repeats() -> u32 {
    1
}

impl ExperimentConfig {
    pub fn new(market: MarketParams, agents: Vec<AgentSpec>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            market,
            agents,
            repeats: 1,
            base_seed: 0,
            output: None,
            label: None,
            tags: Vec::new(),
            jobs: None,
        }
    }

    /// `market.n_agents` copies of one agent.
    pub fn homogeneous(market: MarketParams, kind: AgentKind) -> Self {
        let agents = (0..market.n_agents).map(|_| AgentSpec::new(kind.clone())).collect();
        Self::new(market, agents)
    }

    /// `n - 1` agents of `majority` followed by one of `minority`.
    pub fn five_plus_one(market: MarketParams, majority: AgentKind, minority: AgentKind) -> Self {
        let n = market.n_agents;
        let mut agents: Vec<AgentSpec> =
            (0..n.saturating_sub(1)).map(|_| AgentSpec::new(majority.clone())).collect();
        agents.push(AgentSpec::new(minority));
        Self::new(market, agents)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version must be {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        self.market
            .validate()
            .map_err(|e| Error::Config(format!("market: {e}")))?;
        if self.agents.len() != self.market.n_agents {
            return Err(Error::Config(format!(
                "agents has {} entries but market.n_agents is {}",
                self.agents.len(),
                self.market.n_agents
            )));
        }
        for (i, spec) in self.agents.iter().enumerate() {
            spec.validate(&format!("agents[{i}]"))?;
        }
        if self.repeats < 1 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        Ok(())
    }

    pub fn has_llm_agents(&self) -> bool {
        self.agents.iter().any(AgentSpec::is_llm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema_version": 1, "market": {"n_agents": 2},
                "agents": [{"kind": "fundamentalist"}, {"kind": {"trend": {"lambda": 0.5}}}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.repeats, 1);
        assert_eq!(cfg.market.horizon, 50);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = |text: &str| ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(bad(r#"{"schema_version": 1, "agents": [], "repets": 2}"#).contains("repets"));
        assert!(bad(r#"{"schema_version": 2, "agents": []}"#).contains("schema_version"));
        assert!(bad(r#"{"schema_version": 1, "agents": [{"kind": "naive"}]}"#).contains("n_agents"));
        assert!(bad(
            r#"{"schema_version": 1, "market": {"n_agents": 1}, "agents": [{"kind": {"adaptive": {"weight": 2}}}]}"#
        )
        .contains("agents[0].kind.adaptive.weight"));
        assert!(bad(r#"{"schema_version": 1, "market": {"r": 0}, "agents": []}"#).contains("market"));
    }

    #[test]
    fn compositions() {
        let mp = MarketParams::default();
        let cfg = ExperimentConfig::five_plus_one(mp.clone(), AgentKind::Naive, AgentKind::Fundamentalist);
        assert_eq!(cfg.agents.len(), 6);
        assert_eq!(cfg.agents[5].kind, AgentKind::Fundamentalist);
        assert!(cfg.validate().is_ok());
        assert!(ExperimentConfig::homogeneous(mp, AgentKind::Naive).validate().is_ok());
    }
}
