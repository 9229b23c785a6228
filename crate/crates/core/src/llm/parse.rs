//! Extraction of JSON verdicts from free-form model replies.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// The numeric part of a forecast reply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictedValue {
    Single(f64),
    Pair([f64; 2]),
}

impl PredictedValue {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            PredictedValue::Single(v) => vec![v],
            PredictedValue::Pair(p) => p.to_vec(),
        }
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            PredictedValue::Single(v) => PredictedValue::Single(f(v)),
            PredictedValue::Pair([a, b]) => PredictedValue::Pair([f(a), f(b)]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedPrediction {
    pub reasoning: String,
    pub predicted: PredictedValue,
    pub raw_text: String,
}

impl ParsedPrediction {
    /// The reply a well-behaved model would have sent for this prediction.
    pub fn to_response_json(&self) -> String {
        let mut obj = Map::new();
        obj.insert("reasoning".into(), Value::String(self.reasoning.clone()));
        match self.predicted {
            PredictedValue::Single(v) => {
                obj.insert("predictedValue".into(), v.into());
            }
            PredictedValue::Pair([a, b]) => {
                obj.insert("predictedValue1".into(), a.into());
                obj.insert("predictedValue2".into(), b.into());
            }
        }
        Value::Object(obj).to_string()
    }
}

fn fence() -> &'static Regex {
    static FENCE: OnceLock<Regex> = OnceLock::new();
    FENCE.get_or_init(|| Regex::new(r"```[A-Za-z0-9_+-]*").expect("static regex"))
}

/// Remove `<think>...</think>` blocks and code-fence markers.
fn strip_wrappers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("<think>") {
        out.push_str(&rest[..start]);
        match rest[start..].find("</think>") {
            Some(end) => rest = &rest[start + end + "</think>".len()..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    // a reply that closes a thinking block it never opened
    if let Some(end) = out.rfind("</think>") {
        out = out[end + "</think>".len()..].to_string();
    }
    fence().replace_all(&out, "").into_owned()
}

/// All top-level JSON objects found in `text`, in order of appearance.
pub fn json_objects(text: &str) -> Vec<Map<String, Value>> {
    let cleaned = strip_wrappers(text);
    let mut found = Vec::new();
    let mut pos = 0;
    while let Some(off) = cleaned[pos..].find('{') {
        let start = pos + off;
        let mut stream = serde_json::Deserializer::from_str(&cleaned[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(obj))) => {
                found.push(obj);
                pos = start + stream.byte_offset();
            }
            _ => pos = start + 1,
        }
    }
    found
}

fn last_object(text: &str) -> Result<Map<String, Value>> {
    json_objects(text)
        .pop()
        .ok_or_else(|| Error::parse("no JSON object in reply", text))
}

/// A finite number given either as a JSON number or a numeric string.
pub fn numeric_field(obj: &Map<String, Value>, key: &str, raw: &str) -> Result<f64> {
    let v = obj
        .get(key)
        .ok_or_else(|| Error::parse(format!("missing key '{key}'"), raw))?;
    let num = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    match num {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(Error::parse(format!("key '{key}' is not a finite number: {v}"), raw)),
    }
}

fn reasoning_field(obj: &Map<String, Value>, raw: &str) -> Result<String> {
    match obj.get("reasoning") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Ok(other.to_string()),
        None => Err(Error::parse("missing key 'reasoning'", raw)),
    }
}

/// Parse a forecast reply; the first step carries two values.
pub fn parse_prediction(text: &str, first_step: bool) -> Result<ParsedPrediction> {
    let obj = last_object(text)?;
    let reasoning = reasoning_field(&obj, text)?;
    let predicted = if first_step {
        PredictedValue::Pair([
            numeric_field(&obj, "predictedValue1", text)?,
            numeric_field(&obj, "predictedValue2", text)?,
        ])
    } else {
        PredictedValue::Single(numeric_field(&obj, "predictedValue", text)?)
    };
    Ok(ParsedPrediction {
        reasoning,
        predicted,
        raw_text: text.to_string(),
    })
}

/// Parse a binary classifier verdict `{"reasoning": ..., key: 0|1}`.
pub fn parse_verdict(text: &str, key: &str) -> Result<(String, bool)> {
    let obj = last_object(text)?;
    let v = numeric_field(&obj, key, text)?;
    let flag = if v == 1.0 {
        true
    } else if v == 0.0 {
        false
    } else {
        return Err(Error::parse(format!("key '{key}' must be 0 or 1, got {v}"), text));
    };
    let reasoning = obj
        .get("reasoning")
        .map(|r| r.as_str().map_or_else(|| r.to_string(), str::to_string))
        .unwrap_or_default();
    Ok((reasoning, flag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(text: &str) -> f64 {
        match parse_prediction(text, false).unwrap().predicted {
            PredictedValue::Single(v) => v,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plain_and_fenced() {
        let plain = r#"{"reasoning":"anchor to dividend value","predictedValue":60.0}"#;
        let p = parse_prediction(plain, false).unwrap();
        assert_eq!(p.reasoning, "anchor to dividend value");
        assert_eq!(p.predicted, PredictedValue::Single(60.0));
        let fenced = format!("Here you go:\n```json\n{plain}\n```\n");
        assert_eq!(parse_prediction(&fenced, false).unwrap().predicted, p.predicted);
    }

    #[test]
    fn numeric_strings() {
        assert_eq!(single(r#"{"reasoning":"r","predictedValue":"62.5"}"#), 62.5);
        assert_eq!(single(r#"{"reasoning":"r","predictedValue":" 7 "}"#), 7.0);
        assert!(parse_prediction(r#"{"reasoning":"r","predictedValue":"lots"}"#, false).is_err());
        assert!(parse_prediction(r#"{"reasoning":"r","predictedValue":null}"#, false).is_err());
    }

    #[test]
    fn first_step_pair() {
        let p = parse_prediction(
            r#"{"reasoning": "start near the middle", "predictedValue1": 50, "predictedValue2": 52}"#,
            true,
        )
        .unwrap();
        assert_eq!(p.predicted, PredictedValue::Pair([50.0, 52.0]));
        assert!(parse_prediction(r#"{"reasoning":"r","predictedValue":50}"#, true).is_err());
    }

    #[test]
    fn missing_reasoning() {
        let err = parse_prediction(r#"thinking… done. {"predictedValue":60}"#, false).unwrap_err();
        match err {
            Error::Parse { raw, .. } => assert!(raw.contains("thinking")),
            other => panic!("{other}"),
        }
        assert!(parse_prediction("no json here", false).is_err());
    }

    #[test]
    fn thinking_and_last_object() {
        let text = "<think>maybe {\"predictedValue\": 1}?</think>\nDraft: {\"reasoning\":\"a\",\"predictedValue\":1}\nFinal: {\"reasoning\":\"b {nested}\",\"predictedValue\":2}";
        let p = parse_prediction(text, false).unwrap();
        assert_eq!(p.reasoning, "b {nested}");
        assert_eq!(p.predicted, PredictedValue::Single(2.0));
        let unopened = "long musing with {braces}</think>{\"reasoning\":\"c\",\"predictedValue\":3}";
        assert_eq!(single(unopened), 3.0);
    }

    #[test]
    fn nested_objects_are_not_top_level() {
        let text = r#"{"reasoning":"r","predictedValue":5,"meta":{"predictedValue":9}}"#;
        assert_eq!(single(text), 5.0);
    }

    #[test]
    fn verdicts() {
        let (r, f) = parse_verdict(r#"{"reasoning": "uses growth rates", "Non-linear extrapolation": 1}"#, "Non-linear extrapolation").unwrap();
        assert!(f);
        assert_eq!(r, "uses growth rates");
        let (_, f) = parse_verdict(r#"```{"reasoning": "x", "Fundamental": "0"}```"#, "Fundamental").unwrap();
        assert!(!f);
        assert!(parse_verdict(r#"{"reasoning": "x", "Fundamental": 2}"#, "Fundamental").is_err());
    }

    proptest! {
        #[test]
        fn response_round_trip(v in -1e6f64..1e6, a in 0f64..1000.0, b in 0f64..1000.0, reason in "[ -~]{0,40}") {
            let p = ParsedPrediction { reasoning: reason.clone(), predicted: PredictedValue::Single(v), raw_text: String::new() };
            let back = parse_prediction(&p.to_response_json(), false).unwrap();
            prop_assert_eq!(back.predicted, PredictedValue::Single(v));
            prop_assert_eq!(back.reasoning, reason.clone());
            let p = ParsedPrediction { reasoning: reason, predicted: PredictedValue::Pair([a, b]), raw_text: String::new() };
            let back = parse_prediction(&p.to_response_json(), true).unwrap();
            prop_assert_eq!(back.predicted, PredictedValue::Pair([a, b]));
        }
    }
}
