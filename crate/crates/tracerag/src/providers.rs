//! Live backends: an OpenAI-style HTTP chat endpoint and a scripted,
//! rule-based stand-in used to author replay fixtures offline.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracerag_core::llm::{CompletionRequest, CompletionResponse, LlmError, Role};

use crate::gateway::Provider;

pub struct HttpProvider {
    agent: ureq::Agent,
    base_url: String,
    api_key: String,
}

impl fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpProvider").field("base_url", &self.base_url).field("api_key", &"<redacted>").finish()
    }
}

impl HttpProvider {
    pub fn new(base_url: &str, api_key: String, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider { agent, base_url: base_url.trim_end_matches('/').to_string(), api_key }
    }

    /// POSTs `body` to `{base_url}/{endpoint}` and returns the decoded JSON.
    pub fn post_json(&self, endpoint: &str, body: &Value) -> Result<Value, LlmError> {
        let url = format!("{}/{endpoint}", self.base_url);
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| LlmError::Provider { status: 0, message: e.to_string() })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Provider { status, message: e.to_string() })?;
        if !(200..300).contains(&status) {
            let message = serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| v.pointer("/error/message").and_then(Value::as_str).map(str::to_string))
                .unwrap_or_else(|| text.chars().take(300).collect());
            return Err(LlmError::Provider { status, message });
        }
        serde_json::from_str(&text).map_err(|e| LlmError::Provider { status, message: format!("bad JSON: {e}") })
    }
}

impl Provider for HttpProvider {
    fn call(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let body = json!({
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_completion_tokens": req.max_output_tokens,
        });
        let started = Instant::now();
        let v = self.post_json("chat/completions", &body)?;
        let text = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| LlmError::Provider { status: 200, message: "response has no message content".into() })?;
        Ok(CompletionResponse {
            text: text.to_string(),
            input_tokens: v.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            output_tokens: v.pointer("/usage/completion_tokens").and_then(Value::as_u64).unwrap_or(0),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

/// Placeholder in scripted responses replaced by the prompt's first fenced code block.
pub const ECHO_CODE: &str = "{{echo_code}}";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub role: String,
    /// Every string must occur in the prompt.
    #[serde(default)]
    pub contains: Vec<String>,
    /// No string may occur in the prompt.
    #[serde(default)]
    pub excludes: Vec<String>,
    pub response: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
    /// Fallback response per role name.
    #[serde(default)]
    pub defaults: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("cannot read script {0}: {1}")]
    Io(String, std::io::Error),
    #[error("invalid script {0}: {1}")]
    Parse(String, serde_json::Error),
    #[error("script names unknown role `{0}`")]
    UnknownRole(String),
}

/// Answers from a JSON rule list: the first rule whose role matches and whose
/// `contains`/`excludes` constraints hold wins, else the role default.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    script: Script,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Result<Self, ScriptError> {
        for role in script.rules.iter().map(|r| &r.role).chain(script.defaults.keys()) {
            if Role::from_name(role).is_none() {
                return Err(ScriptError::UnknownRole(role.clone()));
            }
        }
        Ok(ScriptedProvider { script })
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ScriptError::Io(shown.clone(), e))?;
        Self::new(serde_json::from_str(&text).map_err(|e| ScriptError::Parse(shown, e))?)
    }

    fn respond(&self, req: &CompletionRequest) -> Option<String> {
        let role = req.role.name();
        let rule = self.script.rules.iter().find(|r| {
            r.role == role
                && r.contains.iter().all(|s| req.prompt.contains(s.as_str()))
                && !r.excludes.iter().any(|s| req.prompt.contains(s.as_str()))
        });
        let template = rule.map(|r| &r.response).or_else(|| self.script.defaults.get(role))?;
        Some(if template.contains(ECHO_CODE) {
            let code = first_fenced_block(&req.prompt).unwrap_or_default();
            template.replace(ECHO_CODE, &format!("```java\n{code}\n```"))
        } else {
            template.clone()
        })
    }
}

fn first_fenced_block(text: &str) -> Option<&str> {
    let open = text.find("```java\n")?;
    let body = &text[open + "```java\n".len()..];
    Some(body[..body.find("\n```")?].trim_end())
}

impl Provider for ScriptedProvider {
    fn call(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let text = self.respond(req).ok_or_else(|| LlmError::Provider {
            status: 404,
            message: format!("script has no response for role {}", req.role),
        })?;
        Ok(CompletionResponse {
            input_tokens: req.prompt.split_whitespace().count() as u64,
            output_tokens: text.split_whitespace().count() as u64,
            text,
            latency_ms: 0,
        })
    }
}
