//! Scripted chat endpoint for hermetic runs.
//!
//! A script is a JSON document with an optional `default` reply and a list of
//! `rules`. The first rule whose conditions all hold answers the request:
//!
//! ```json
//! {
//!   "default": "{\"reasoning\": \"anchor\", \"predictedValue\": 60}",
//!   "rules": [
//!     {"last_user_contains": "first time step",
//!      "reply": "{\"reasoning\": \"mid\", \"predictedValue1\": 50, \"predictedValue2\": 50}"},
//!     {"last_user_contains": "time period 5.", "times": 1,
//!      "reply": "{\"reasoning\": \"up\", \"predictedValue\": 1200}"}
//!   ]
//! }
//! ```

use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::client::{ChatBackend, ChatRequest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_user_contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_contains: Option<String>,
    /// Matches if any message contains the text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub any_contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    /// Successive matches cycle through these replies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replies: Vec<String>,
    /// The rule stops matching after this many uses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<usize>,
    /// Answer with this HTTP status instead of a completion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
}

impl MockRule {
    fn matches(&self, req: &ChatRequest) -> bool {
        let contains = |hay: Option<&str>, needle: &Option<String>| match needle {
            Some(n) => hay.is_some_and(|h| h.contains(n.as_str())),
            None => true,
        };
        contains(req.last_user(), &self.last_user_contains)
            && contains(req.system(), &self.system_contains)
            && self.model.as_ref().is_none_or(|m| *m == req.model)
            && self
                .any_contains
                .as_ref()
                .is_none_or(|n| req.messages.iter().any(|m| m.content.contains(n.as_str())))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    #[serde(default)]
    pub rules: Vec<MockRule>,
}

impl MockScript {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("mock script {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("mock script {}: {e}", path.display())))
    }

    /// A script that always sends the same reply.
    pub fn constant(reply: impl Into<String>) -> Self {
        Self { default: Some(reply.into()), rules: Vec::new() }
    }
}

/// What the script says to do with one request.
#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Content(String),
    Status(u16),
}

/// In-process backend that answers from a [`MockScript`].
pub struct ScriptedBackend {
    script: MockScript,
    uses: Mutex<Vec<usize>>,
}

impl ScriptedBackend {
    pub fn new(script: MockScript) -> Self {
        let uses = Mutex::new(vec![0; script.rules.len()]);
        Self { script, uses }
    }

    pub fn respond(&self, req: &ChatRequest) -> Option<MockReply> {
        let mut uses = self.uses.lock().expect("mock state");
        for (i, rule) in self.script.rules.iter().enumerate() {
            if rule.times.is_some_and(|n| uses[i] >= n) || !rule.matches(req) {
                continue;
            }
            let k = uses[i];
            uses[i] += 1;
            if let Some(status) = rule.status {
                return Some(MockReply::Status(status));
            }
            let text = if rule.replies.is_empty() {
                rule.reply.clone().unwrap_or_default()
            } else {
                rule.replies[k % rule.replies.len()].clone()
            };
            return Some(MockReply::Content(text));
        }
        self.script.default.clone().map(MockReply::Content)
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        match self.respond(request) {
            Some(MockReply::Content(text)) => Ok(text),
            Some(MockReply::Status(code)) => Err(Error::Transport(format!("mock HTTP {code}"))),
            None => Err(Error::Transport("mock script has no reply for this request".into())),
        }
    }
}

/// Chat-completions HTTP server backed by a [`MockScript`].
pub struct MockServer {
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
    port: u16,
    received: Arc<Mutex<Vec<ChatRequest>>>,
}

impl MockServer {
    /// Serve on an ephemeral localhost port.
    pub fn start(script: MockScript) -> Result<Self> {
        Self::bind("127.0.0.1:0", script)
    }

    pub fn bind(addr: &str, script: MockScript) -> Result<Self> {
        let server = tiny_http::Server::http(addr)
            .map_err(|e| Error::Transport(format!("cannot bind mock server on {addr}: {e}")))?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| Error::Transport("mock server has no IP address".into()))?;
        let server = Arc::new(server);
        let received = Arc::new(Mutex::new(Vec::new()));
        let backend = ScriptedBackend::new(script);
        let handle = {
            let server = Arc::clone(&server);
            let received = Arc::clone(&received);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    serve_one(request, &backend, &received);
                }
            })
        };
        Ok(Self { server, handle: Some(handle), port, received })
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}/v1/chat/completions", self.port)
    }

    /// Requests received so far, in arrival order.
    pub fn received(&self) -> Vec<ChatRequest> {
        self.received.lock().expect("mock log").clone()
    }

    /// Block until the server thread ends.
    pub fn join(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn json_response(status: u16, body: String) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
    let header = tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
        .expect("static header");
    tiny_http::Response::from_string(body)
        .with_status_code(status)
        .with_header(header)
}

fn serve_one(
    mut request: tiny_http::Request,
    backend: &ScriptedBackend,
    received: &Mutex<Vec<ChatRequest>>,
) {
    let mut body = String::new();
    if std::io::Read::read_to_string(request.as_reader(), &mut body).is_err() {
        let _ = request.respond(json_response(400, r#"{"error":"unreadable body"}"#.into()));
        return;
    }
    let chat: ChatRequest = match serde_json::from_str(&body) {
        Ok(c) => c,
        Err(e) => {
            let msg = serde_json::json!({ "error": format!("bad request: {e}") }).to_string();
            let _ = request.respond(json_response(400, msg));
            return;
        }
    };
    received.lock().expect("mock log").push(chat.clone());
    let response = match backend.respond(&chat) {
        Some(MockReply::Content(text)) => {
            let body = serde_json::json!({
                "object": "chat.completion",
                "model": chat.model,
                "choices": [{
                    "index": 0,
                    "message": { "role": "assistant", "content": text },
                    "finish_reason": "stop"
                }]
            });
            json_response(200, body.to_string())
        }
        Some(MockReply::Status(code)) => {
            json_response(code, serde_json::json!({ "error": "scripted failure" }).to_string())
        }
        None => json_response(404, r#"{"error":"no scripted reply"}"#.into()),
    };
    let _ = request.respond(response);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::client::ChatMessage;
    use crate::llm::config::LlmAgentConfig;

    fn req(user: &str) -> ChatRequest {
        ChatRequest::new(
            &LlmAgentConfig::new("mock:x", "m"),
            vec![ChatMessage::system("sys"), ChatMessage::user(user)],
            None,
        )
    }

    #[test]
    fn rules_in_order_with_limits() {
        let script: MockScript = serde_json::from_str(
            r#"{"default": "d", "rules": [
                {"last_user_contains": "hello", "times": 1, "reply": "first"},
                {"last_user_contains": "hello", "replies": ["a", "b"]},
                {"system_contains": "nope", "reply": "never"}
            ]}"#,
        )
        .unwrap();
        let b = ScriptedBackend::new(script);
        let answers: Vec<String> = (0..4).map(|_| b.complete(&req("hello")).unwrap()).collect();
        assert_eq!(answers, ["first", "a", "b", "a"]);
        assert_eq!(b.complete(&req("other")).unwrap(), "d");
    }

    #[test]
    fn no_default_is_an_error() {
        let b = ScriptedBackend::new(MockScript::default());
        assert!(matches!(b.complete(&req("x")), Err(Error::Transport(_))));
    }

    #[test]
    fn unknown_rule_fields_rejected() {
        assert!(serde_json::from_str::<MockScript>(r#"{"rules": [{"reply": "x", "tims": 1}]}"#).is_err());
    }
}
