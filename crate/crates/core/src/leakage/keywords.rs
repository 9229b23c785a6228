use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orchestrator::RunLog;

const DEFAULT_KEYWORDS: &str = include_str!("../../assets/keywords.txt");
/// Characters of context kept on each side of the first match.
const SNIPPET_RADIUS: usize = 40;

/// The shipped keyword list.
pub fn default_keywords() -> Vec<String> {
    parse_keyword_list(DEFAULT_KEYWORDS)
}

/// One keyword or phrase per line; blank lines and `#` comments ignored.
pub fn parse_keyword_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub run_id: String,
    pub keyword: String,
    pub agent: usize,
    pub period: u32,
    pub count: usize,
    pub snippet: String,
}

/// Case-insensitive whole-word matcher for a keyword list.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    patterns: Vec<(String, Regex)>,
}

impl KeywordMatcher {
    pub fn new(keywords: &[String]) -> Result<Self> {
        let patterns = keywords
            .iter()
            .map(|k| {
                let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
                let lead = if word(k.chars().next()) { r"\b" } else { "" };
                let trail = if word(k.chars().last()) { r"\b" } else { "" };
                Regex::new(&format!("(?i){lead}{}{trail}", regex::escape(k)))
                    .map(|re| (k.clone(), re))
                    .map_err(|e| Error::Config(format!("keyword {k:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { patterns })
    }

    pub fn defaults() -> Self {
        Self::new(&default_keywords()).expect("shipped keywords compile")
    }

    /// `(keyword, count, snippet around the first match)` for every keyword found in `text`.
    pub fn scan_text(&self, text: &str) -> Vec<(String, usize, String)> {
        self.patterns
            .iter()
            .filter_map(|(k, re)| {
                let mut found = re.find_iter(text);
                let first = found.next()?;
                Some((k.clone(), 1 + found.count(), snippet(text, first.start(), first.end())))
            })
            .collect()
    }
}

fn snippet(text: &str, start: usize, end: usize) -> String {
    let lo = text[..start]
        .char_indices()
        .rev()
        .nth(SNIPPET_RADIUS - 1)
        .map_or(0, |(i, _)| i);
    let hi = text[end..]
        .char_indices()
        .nth(SNIPPET_RADIUS)
        .map_or(text.len(), |(i, _)| end + i);
    let mut s = text[lo..hi].replace(['\n', '\r'], " ");
    if lo > 0 {
        s.insert_str(0, "...");
    }
    if hi < text.len() {
        s.push_str("...");
    }
    s
}

/// All keyword hits in the justifications of a run, ordered by period, agent, keyword list order.
pub fn keyword_scan(run: &RunLog, run_id: &str, matcher: &KeywordMatcher) -> Vec<KeywordHit> {
    let mut hits = Vec::new();
    for step in &run.steps {
        for (agent, text) in step.justifications.iter().enumerate() {
            for (keyword, count, snippet) in matcher.scan_text(text) {
                hits.push(KeywordHit { run_id: run_id.to_string(), keyword, agent, period: step.t, count, snippet });
            }
        }
    }
    hits
}

pub fn hit_totals(hits: &[KeywordHit]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for h in hits {
        *out.entry(h.keyword.clone()).or_insert(0) += h.count;
    }
    out
}
