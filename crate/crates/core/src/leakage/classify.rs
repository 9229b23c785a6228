use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{bubble_shape, BubbleParams};
use crate::error::Result;
use crate::llm::{backend_for, fill, parse_verdict, ChatBackend, ChatMessage, ChatRequest, LlmAgentConfig};
use crate::orchestrator::RunLog;
use crate::seed::mix;
use crate::stats::{cohen_kappa, Kappa};

const NONLINEAR_PROMPT: &str = include_str!("../../assets/classify_nonlinear.txt");
const FUNDAMENTAL_PROMPT: &str = include_str!("../../assets/classify_fundamental.txt");

/// Periods at or after this are never classified.
pub const WINDOW_LIMIT: u32 = 12;
/// First period of the nonlinear window.
pub const NONLINEAR_FIRST: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Nonlinear,
    Fundamental,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Nonlinear, Task::Fundamental];

    /// JSON key of the verdict.
    pub fn key(self) -> &'static str {
        match self {
            Task::Nonlinear => "Non-linear extrapolation",
            Task::Fundamental => "Fundamental",
        }
    }

    pub fn prompt(self, text: &str) -> String {
        let template = match self {
            Task::Nonlinear => NONLINEAR_PROMPT,
            Task::Fundamental => FUNDAMENTAL_PROMPT,
        };
        fill(template, &[("text", text.to_string())])
    }

    fn first_period(self) -> u32 {
        match self {
            Task::Nonlinear => NONLINEAR_FIRST,
            Task::Fundamental => 1,
        }
    }
}

/// Periods `[first, end)` whose justifications are classified.
pub fn classification_window(task: Task, first_peak: Option<u32>) -> [u32; 2] {
    let end = first_peak.map_or(WINDOW_LIMIT, |p| p.min(WINDOW_LIMIT));
    let first = task.first_period();
    [first, end.max(first)]
}

/// First bubble peak of a run under the default bubble definition.
pub fn first_peak(run: &RunLog) -> Option<u32> {
    let p_f = run.header.market.fundamental_price();
    bubble_shape(&run.prices(), p_f, &BubbleParams::for_fundamental(p_f)).peak
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JustificationLabel {
    pub run_id: String,
    pub agent: usize,
    pub period: u32,
    pub task: Task,
    /// Absent when the classifier never gave a usable verdict.
    pub label: Option<bool>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub reasoning: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub run_id: String,
    pub task: Task,
    pub window: [u32; 2],
    pub labeled: usize,
    pub positive: usize,
    /// Unknown verdicts, left out of the proportion.
    pub excluded: usize,
    /// Window entries with no justification text, not sent.
    pub empty: usize,
    pub proportion: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub labels: Vec<JustificationLabel>,
    pub summaries: Vec<TaskSummary>,
}

/// Classifies justifications with a chat model.
pub struct JustificationClassifier {
    cfg: LlmAgentConfig,
    backend: Arc<dyn ChatBackend>,
}

impl JustificationClassifier {
    pub fn new(cfg: LlmAgentConfig) -> Result<Self> {
        cfg.validate("classifier")?;
        let backend = backend_for(&cfg)?;
        Ok(Self { cfg, backend })
    }

    pub fn with_backend(cfg: LlmAgentConfig, backend: Arc<dyn ChatBackend>) -> Self {
        Self { cfg, backend }
    }

    /// Verdict on one text; parse failures are retried up to `max_retries` times.
    pub fn classify_text(&self, task: Task, text: &str, seed_key: &[u64]) -> (Option<bool>, String, Option<String>) {
        let messages = vec![ChatMessage::user(task.prompt(text))];
        let mut last_err = None;
        for attempt in 0..=self.cfg.max_retries {
            let seed = self.cfg.seed.map(|s| {
                let mut key = vec![s, task as u64, attempt as u64];
                key.extend_from_slice(seed_key);
                mix(&key)
            });
            let request = ChatRequest::new(&self.cfg, messages.clone(), seed);
            match self.backend.complete(&request) {
                Err(e) => return (None, String::new(), Some(e.to_string())),
                Ok(reply) => match parse_verdict(&reply, task.key()) {
                    Ok((reasoning, flag)) => return (Some(flag), reasoning, None),
                    Err(e) => last_err = Some(e.to_string()),
                },
            }
        }
        (None, String::new(), last_err)
    }

    /// Label every justification inside each task's window.
    pub fn classify_run(&self, run: &RunLog, run_id: &str, tasks: &[Task]) -> Classification {
        let peak = first_peak(run);
        let mut labels = Vec::new();
        let mut summaries = Vec::new();
        for &task in tasks {
            let window = classification_window(task, peak);
            let mut items = Vec::new();
            let mut empty = 0;
            for step in run.steps.iter().filter(|s| (window[0]..window[1]).contains(&s.t)) {
                for (agent, text) in step.justifications.iter().enumerate() {
                    if text.trim().is_empty() {
                        empty += 1;
                    } else {
                        items.push((agent, step.t, text.as_str()));
                    }
                }
            }
            let base = run.header.run_seed;
            let task_labels: Vec<JustificationLabel> = items
                .par_iter()
                .map(|&(agent, period, text)| {
                    let (label, reasoning, error) =
                        self.classify_text(task, text, &[base, agent as u64, period as u64]);
                    JustificationLabel { run_id: run_id.to_string(), agent, period, task, label, reasoning, error }
                })
                .collect();
            summaries.push(summarize(run_id, task, window, empty, &task_labels));
            labels.extend(task_labels);
        }
        Classification { labels, summaries }
    }
}

fn summarize(run_id: &str, task: Task, window: [u32; 2], empty: usize, labels: &[JustificationLabel]) -> TaskSummary {
    let labeled = labels.iter().filter(|l| l.label.is_some()).count();
    let positive = labels.iter().filter(|l| l.label == Some(true)).count();
    let mut flags = Vec::new();
    if window[0] >= window[1] {
        flags.push(format!("empty window: periods [{}, {})", window[0], window[1]));
    }
    if task == Task::Nonlinear {
        flags.push(format!("nonlinear window starts at period {NONLINEAR_FIRST}"));
    }
    TaskSummary {
        run_id: run_id.to_string(),
        task,
        window,
        labeled,
        positive,
        excluded: labels.len() - labeled,
        empty,
        proportion: (labeled > 0).then(|| positive as f64 / labeled as f64),
        flags,
    }
}

/// Agreement between two labelings of the same items.
pub fn validate_classifier(labels_a: &[bool], labels_b: &[bool]) -> Result<Kappa> {
    cohen_kappa(labels_a, labels_b)
}

/// Per-task kappa between two label sets, matched on (run, agent, period, task).
/// Items unknown in either set are skipped.
pub fn compare_label_sets(a: &[JustificationLabel], b: &[JustificationLabel]) -> Vec<(Task, Result<Kappa>)> {
    use std::collections::HashMap;
    let index: HashMap<(&str, usize, u32, Task), bool> = b
        .iter()
        .filter_map(|l| l.label.map(|v| ((l.run_id.as_str(), l.agent, l.period, l.task), v)))
        .collect();
    Task::ALL
        .iter()
        .map(|&task| {
            let (xs, ys): (Vec<bool>, Vec<bool>) = a
                .iter()
                .filter(|l| l.task == task)
                .filter_map(|l| Some((l.label?, *index.get(&(l.run_id.as_str(), l.agent, l.period, task))?)))
                .unzip();
            (task, validate_classifier(&xs, &ys))
        })
        .collect()
}
