use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::client::{backend_for, ChatBackend, ChatMessage, ChatRequest};
use super::config::LlmAgentConfig;
use super::parse::{parse_prediction, ParsedPrediction, PredictedValue};
use super::prompts::{build_initial_prompt, build_step_prompt, build_system_prompt, cap_message};
use crate::agents::{AgentOutput, ForecastContext, Forecaster};
use crate::error::{Error, Result};
use crate::market::MarketParams;
use crate::seed::request_seed;

/// One request/response pair sent on behalf of an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// Period at which the request was made.
    pub t: u32,
    /// 0 for the first request of the period, then one per re-query.
    pub attempt: u32,
    pub request: ChatRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Forecaster backed by a chat-completions endpoint.
pub struct LlmForecaster {
    cfg: LlmAgentConfig,
    params: MarketParams,
    backend: Arc<dyn ChatBackend>,
    run_seed: u64,
    agent_index: usize,
    cap_known: bool,
    /// Own past (prompt, final reply) pairs, most recent last.
    exchanges: VecDeque<(String, String)>,
}

impl LlmForecaster {
    pub fn new(cfg: LlmAgentConfig, params: MarketParams, run_seed: u64, agent_index: usize) -> Result<Self> {
        let backend = backend_for(&cfg)?;
        Ok(Self::with_backend(cfg, params, backend, run_seed, agent_index))
    }

    pub fn with_backend(
        cfg: LlmAgentConfig,
        params: MarketParams,
        backend: Arc<dyn ChatBackend>,
        run_seed: u64,
        agent_index: usize,
    ) -> Self {
        Self {
            cfg,
            params,
            backend,
            run_seed,
            agent_index,
            cap_known: false,
            exchanges: VecDeque::new(),
        }
    }

    fn base_messages(&self, prompt: &str) -> Vec<ChatMessage> {
        let mut messages = vec![ChatMessage::system(build_system_prompt(&self.params, self.cap_known))];
        let skip = self.exchanges.len().saturating_sub(self.cfg.memory);
        for (user, assistant) in self.exchanges.iter().skip(skip) {
            messages.push(ChatMessage::user(user.clone()));
            messages.push(ChatMessage::assistant(assistant.clone()));
        }
        messages.push(ChatMessage::user(prompt));
        messages
    }

    fn in_range(&self, p: &PredictedValue) -> bool {
        p.values().iter().all(|v| (0.0..=self.params.cap).contains(v))
    }

    /// Send `prompt`, re-querying on unparseable or out-of-range replies.
    fn query(&mut self, t: u32, prompt: String, first_step: bool) -> Result<AgentOutput<PredictedValue>> {
        let mut messages = self.base_messages(&prompt);
        let mut transcript = Vec::new();
        let mut disclosed = false;
        let mut last: Option<(ParsedPrediction, String)> = None;
        let mut parse_err: Option<Error> = None;

        for attempt in 0..=self.cfg.max_retries {
            let seed = self
                .cfg
                .seed
                .map(|s| request_seed(s, self.run_seed, self.agent_index, t).wrapping_add(attempt as u64));
            let request = ChatRequest::new(&self.cfg, messages.clone(), seed);
            let reply = match self.backend.complete(&request) {
                Ok(r) => r,
                Err(e) => {
                    transcript.push(TranscriptEntry { t, attempt, request, response: None, error: Some(e.to_string()) });
                    return Err(e);
                }
            };
            transcript.push(TranscriptEntry { t, attempt, request, response: Some(reply.clone()), error: None });
            match parse_prediction(&reply, first_step) {
                Err(e) => {
                    log::debug!("agent {} t={t}: unparseable reply ({e})", self.agent_index);
                    parse_err = Some(e);
                }
                Ok(parsed) if self.in_range(&parsed.predicted) => {
                    self.remember(prompt, reply);
                    return Ok(AgentOutput {
                        value: parsed.predicted,
                        justification: parsed.reasoning,
                        flags: Vec::new(),
                        transcript,
                        cap_disclosed: disclosed,
                    });
                }
                Ok(parsed) => {
                    if !self.cap_known {
                        self.cap_known = true;
                        disclosed = true;
                    }
                    messages[0] = ChatMessage::system(build_system_prompt(&self.params, true));
                    messages.push(ChatMessage::assistant(reply.clone()));
                    messages.push(ChatMessage::user(cap_message(&self.params)));
                    last = Some((parsed, reply));
                    parse_err = None;
                }
            }
        }

        match (last, parse_err) {
            (Some((parsed, reply)), None) => {
                let cap = self.params.cap;
                self.remember(prompt, reply);
                Ok(AgentOutput {
                    value: parsed.predicted.map(|v| v.clamp(0.0, cap)),
                    justification: parsed.reasoning,
                    flags: vec!["cap_protocol_violation".into()],
                    transcript,
                    cap_disclosed: disclosed,
                })
            }
            (_, Some(err)) => Err(err),
            (None, None) => unreachable!("at least one attempt is made"),
        }
    }

    fn remember(&mut self, prompt: String, reply: String) {
        self.exchanges.push_back((prompt, reply));
        while self.exchanges.len() > self.cfg.memory {
            self.exchanges.pop_front();
        }
    }
}

impl Forecaster for LlmForecaster {
    fn initial(&mut self) -> Result<AgentOutput<[f64; 2]>> {
        let out = self.query(1, build_initial_prompt(&self.params), true)?;
        let PredictedValue::Pair(pair) = out.value else {
            unreachable!("first-step parse yields a pair")
        };
        Ok(AgentOutput {
            value: pair,
            justification: out.justification,
            flags: out.flags,
            transcript: out.transcript,
            cap_disclosed: out.cap_disclosed,
        })
    }

    fn forecast(&mut self, ctx: &ForecastContext) -> Result<AgentOutput<f64>> {
        ctx.validate()?;
        let out = self.query(ctx.t, build_step_prompt(ctx, self.cfg.prompt_variant), false)?;
        let PredictedValue::Single(v) = out.value else {
            unreachable!("step parse yields one value")
        };
        Ok(AgentOutput {
            value: v,
            justification: out.justification,
            flags: out.flags,
            transcript: out.transcript,
            cap_disclosed: out.cap_disclosed,
        })
    }

    fn cap_known(&self) -> bool {
        self.cap_known
    }
}
