//! Chat-model forecasters: prompts, reply parsing, transport and the
//! scripted mock endpoint.

mod agent;
mod client;
mod config;
mod mock;
mod parse;
mod prompts;

pub(crate) use prompts::fill;

pub use agent::{LlmForecaster, TranscriptEntry};
pub use client::{
    backend_for, response_content, ChatBackend, ChatMessage, ChatRequest, HttpBackend, RateLimiter, Role,
};
pub use config::{LlmAgentConfig, PromptVariant};
pub use mock::{MockReply, MockRule, MockScript, MockServer, ScriptedBackend};
pub use parse::{json_objects, numeric_field, parse_prediction, parse_verdict, ParsedPrediction, PredictedValue};
pub use prompts::{
    build_initial_prompt, build_step_prompt, build_system_prompt, cap_message, cap_note, format_value,
    history_table,
};
