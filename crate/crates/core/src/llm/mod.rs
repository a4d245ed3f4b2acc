//! Chat-completion abstraction shared by every pipeline stage.
//!
//! The core only knows the [`ChatModel`] trait. The gateway with the remote
//! provider and the record/replay cache implements it in the `tracerag` crate;
//! tests implement it with scripted models.

mod template;

use alloc::string::String;
use core::fmt;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use template::{PromptTemplate, TemplateError, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Cleanser,
    Describer,
    Analyzer,
    RelevanceReviewer,
    CollisionReviewer,
    QueryReviewer,
    Organizer,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::Cleanser,
        Role::Describer,
        Role::Analyzer,
        Role::RelevanceReviewer,
        Role::CollisionReviewer,
        Role::QueryReviewer,
        Role::Organizer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Cleanser => "Cleanser",
            Role::Describer => "Describer",
            Role::Analyzer => "Analyzer",
            Role::RelevanceReviewer => "RelevanceReviewer",
            Role::CollisionReviewer => "CollisionReviewer",
            Role::QueryReviewer => "QueryReviewer",
            Role::Organizer => "Organizer",
        }
    }

    /// File stem of the role's template file.
    pub fn template_stem(self) -> &'static str {
        match self {
            Role::Cleanser => "cleanser",
            Role::Describer => "describer",
            Role::Analyzer => "analyzer",
            Role::RelevanceReviewer => "relevance_reviewer",
            Role::CollisionReviewer => "collision_reviewer",
            Role::QueryReviewer => "query_reviewer",
            Role::Organizer => "organizer",
        }
    }

    pub fn from_name(name: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub role: Role,
    pub prompt: String,
    pub model: String,
    pub temperature: f32,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    pub fn new(role: Role, prompt: String, model: impl Into<String>) -> Self {
        CompletionRequest {
            role,
            prompt,
            model: model.into(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }

    pub fn cache_key(&self) -> String {
        cache_key(self.role, &self.model, &self.prompt)
    }
}

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 4096;

/// Hex SHA-256 over role name, model name and prompt, NUL-separated.
pub fn cache_key(role: Role, model: &str, prompt: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(role.name().as_bytes());
    h.update([0]);
    h.update(model.as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    let mut out = String::with_capacity(64);
    for b in h.finalize().iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
}

impl CompletionResponse {
    pub fn text(text: impl Into<String>) -> Self {
        CompletionResponse { text: text.into(), input_tokens: 0, output_tokens: 0, latency_ms: 0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input: u64,
    pub output: u64,
}

impl TokenUsage {
    pub fn add(&mut self, resp: &CompletionResponse) {
        self.input += resp.input_tokens;
        self.output += resp.output_tokens;
    }

    pub fn total(&self) -> u64 {
        self.input + self.output
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("replay cache has no entry for key {0}")]
    CacheMiss(String),
    #[error("provider error (status {status}): {message}")]
    Provider { status: u16, message: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Anything that can answer a chat completion.
pub trait ChatModel: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

impl<T: ChatModel + ?Sized> ChatModel for &T {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(req)
    }
}

/// Renders a role's template and sends it to the model.
#[derive(Clone, Copy)]
pub struct PromptRunner<'a> {
    pub model: &'a dyn ChatModel,
    pub templates: &'a TemplateSet,
    pub model_name: &'a str,
    pub max_output_tokens: u32,
}

impl<'a> PromptRunner<'a> {
    pub fn new(model: &'a dyn ChatModel, templates: &'a TemplateSet, model_name: &'a str) -> Self {
        PromptRunner { model, templates, model_name, max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS }
    }

    pub fn request(&self, role: Role, vars: &[(&str, &str)]) -> Result<CompletionRequest, LlmError> {
        let prompt = self.templates.render(role, vars)?;
        let mut req = CompletionRequest::new(role, prompt, self.model_name);
        req.max_output_tokens = self.max_output_tokens;
        Ok(req)
    }

    pub fn ask(&self, role: Role, vars: &[(&str, &str)]) -> Result<CompletionResponse, LlmError> {
        self.model.complete(&self.request(role, vars)?)
    }

    /// Like [`ask`](Self::ask), also returning the request's cache key.
    pub fn ask_keyed(
        &self,
        role: Role,
        vars: &[(&str, &str)],
    ) -> (String, Result<CompletionResponse, LlmError>) {
        match self.request(role, vars) {
            Ok(req) => (req.cache_key(), self.model.complete(&req)),
            Err(e) => (String::new(), Err(e)),
        }
    }
}
