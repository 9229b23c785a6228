use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::{backend_for, build_system_prompt, ChatMessage, ChatRequest, LlmAgentConfig};
use crate::market::MarketParams;
use crate::seed::mix;

const QUESTIONS: &str = include_str!("../../assets/leakage_questions.txt");

/// Identification, main result, bubble height.
pub fn leakage_questions() -> Vec<&'static str> {
    QUESTIONS.lines().filter(|l| !l.trim().is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeAnswer {
    pub question: usize,
    pub repeat: u32,
    pub request: ChatRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Reviewer slot for one question. The verdict is left for a person to set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSlot {
    pub question: usize,
    pub prompt: String,
    pub answers: Vec<String>,
    pub leakage: Option<bool>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageProbe {
    pub model: String,
    pub answers: Vec<ProbeAnswer>,
    pub review: Vec<ReviewSlot>,
}

/// Ask each question `repeats` times, each followed by the market instructions.
pub fn leakage_probe(target: &LlmAgentConfig, params: &MarketParams, repeats: u32) -> Result<LeakageProbe> {
    target.validate("target")?;
    if repeats < 1 {
        return Err(Error::Config("leakage probe repeats must be >= 1".into()));
    }
    let backend = backend_for(target)?;
    let instructions = build_system_prompt(params, false);
    let questions = leakage_questions();
    let mut answers = Vec::new();
    for (q, question) in questions.iter().enumerate() {
        for repeat in 0..repeats {
            let messages = vec![ChatMessage::user(format!("{question}\n\n{instructions}"))];
            let seed = target.seed.map(|s| mix(&[s, q as u64, repeat as u64]));
            let request = ChatRequest::new(target, messages, seed);
            let (answer, error) = match backend.complete(&request) {
                Ok(a) => (Some(a), None),
                Err(e) => (None, Some(e.to_string())),
            };
            answers.push(ProbeAnswer { question: q, repeat, request, answer, error });
        }
    }
    let review = questions
        .iter()
        .enumerate()
        .map(|(q, prompt)| ReviewSlot {
            question: q,
            prompt: prompt.to_string(),
            answers: answers.iter().filter(|a| a.question == q).filter_map(|a| a.answer.clone()).collect(),
            leakage: None,
            notes: String::new(),
        })
        .collect();
    Ok(LeakageProbe { model: target.model.clone(), answers, review })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mock_cfg(dir: &tempfile::TempDir, script: &str) -> LlmAgentConfig {
        let path = dir.path().join("script.json");
        std::fs::write(&path, script).unwrap();
        LlmAgentConfig::new(format!("mock:{}", path.display()), "m")
    }

    #[test]
    fn questions() {
        let q = leakage_questions();
        assert_eq!(q.len(), 3);
        assert!(q[2].contains("approximate maximum price of the bubbles"));
    }

    #[test]
    fn fifteen_records() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = mock_cfg(&dir, r#"{"default": "a learning-to-forecast experiment"}"#);
        let p = leakage_probe(&cfg, &MarketParams::default(), 5).unwrap();
        assert_eq!(p.answers.len(), 15);
        assert_eq!(p.review.len(), 3);
        assert_eq!(p.review[0].answers, vec!["a learning-to-forecast experiment"; 5]);
        assert!(p.review.iter().all(|r| r.leakage.is_none()));
        let first = p.answers[0].request.last_user().unwrap();
        assert!(first.starts_with("Which experiment do you think"));
        assert!(first.contains(&build_system_prompt(&MarketParams::default(), false)));
        assert!(p.answers[0].request.system().is_none());
    }

    #[test]
    fn transport_errors_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = mock_cfg(&dir, r#"{"rules": [{"status": 503}]}"#);
        let p = leakage_probe(&cfg, &MarketParams::default(), 2).unwrap();
        assert_eq!(p.answers.len(), 6);
        assert!(p.answers.iter().all(|a| a.error.is_some() && a.answer.is_none()));
        assert!(leakage_probe(&cfg, &MarketParams::default(), 0).is_err());
    }
}
