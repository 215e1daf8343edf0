//! Chat-completion providers.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::templates::TemplateName;
use crate::corpus::{Conversation, EventSet, SampledPersona, TopicClustering};

/// Structured inputs behind a rendered prompt. Network providers only send
/// the prompt; the offline mock reads the structure instead of parsing text.
#[derive(Debug, Clone, Copy)]
pub enum RequestContext<'a> {
    Persona(&'a SampledPersona),
    Dialogue {
        first: (&'a SampledPersona, &'a EventSet),
        second: (&'a SampledPersona, &'a EventSet),
    },
    Clustering(&'a Conversation),
    Queries {
        conv: &'a Conversation,
        topics: &'a TopicClustering,
    },
    Distractor {
        target: &'a EventSet,
        target_name: &'a str,
        persona_type: &'a str,
    },
    CrossConversation {
        a: &'a Conversation,
        b: &'a Conversation,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub stage: TemplateName,
    pub prompt: &'a str,
    /// Zero-based attempt number; retries reuse the same prompt.
    pub attempt: u32,
    pub context: RequestContext<'a>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider reply: {0}")]
    Malformed(String),
    #[error("scripted provider has no reply left for {0}")]
    Exhausted(TemplateName),
}

impl ProviderError {
    /// Whether regenerating could help.
    pub fn is_transient(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait Provider: Send + Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ProviderError>;
}

fn default_api_key_env() -> String {
    "HINS_API_KEY".to_string()
}
fn default_max_retries() -> u32 {
    3
}
fn default_timeout() -> u64 {
    120
}
fn default_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    /// Endpoint root; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub request_timeout: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism_limit: usize,
}

impl ProviderConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: default_api_key_env(),
            max_retries: default_max_retries(),
            request_timeout: default_timeout(),
            parallelism_limit: default_parallelism(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.parallelism_limit < 1 {
            return Err("parallelism_limit must be at least 1".into());
        }
        if self.base_url.trim().is_empty() {
            return Err("base_url is empty".into());
        }
        if self.model_name.trim().is_empty() {
            return Err("model_name is empty".into());
        }
        Ok(())
    }
}

/// Request body for one prompt: a single user message.
pub fn chat_request_body(model: &str, stage: TemplateName, prompt: &str) -> Value {
    let mut body = json!({
        "model": model,
        "messages": [{ "role": "user", "content": prompt }],
    });
    if stage.expects_json() {
        body["response_format"] = json!({ "type": "json_object" });
    }
    body
}

/// Pull `choices[0].message.content` out of a completion reply.
pub fn reply_content(reply: &Value) -> Result<String, ProviderError> {
    reply
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Malformed("missing choices[0].message.content".into()))
}

/// OpenAI-style HTTP chat-completion client.
pub struct HttpProvider {
    config: ProviderConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpProvider {
    /// Reads the bearer token from the configured environment variable.
    pub fn from_env(config: ProviderConfig) -> Result<Self, ProviderError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| ProviderError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::with_key(config, api_key))
    }

    pub fn with_key(config: ProviderConfig, api_key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.request_timeout)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, api_key, agent }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

impl Provider for HttpProvider {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ProviderError> {
        let body = chat_request_body(&self.config.model_name, request.stage, request.prompt);
        let mut resp = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, body: text });
        }
        let reply: Value = serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        reply_content(&reply)
    }
}

/// Replays canned replies per stage, in order.
#[derive(Default)]
pub struct ScriptedProvider {
    replies: Mutex<BTreeMap<TemplateName, VecDeque<String>>>,
    log: Mutex<Vec<(TemplateName, String)>>,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, stage: TemplateName, reply: impl Into<String>) -> &Self {
        self.replies.lock().unwrap().entry(stage).or_default().push_back(reply.into());
        self
    }

    /// Prompts received so far.
    pub fn prompts(&self) -> Vec<(TemplateName, String)> {
        self.log.lock().unwrap().clone()
    }
}

impl Provider for ScriptedProvider {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ProviderError> {
        self.log.lock().unwrap().push((request.stage, request.prompt.to_string()));
        self.replies
            .lock()
            .unwrap()
            .get_mut(&request.stage)
            .and_then(VecDeque::pop_front)
            .ok_or(ProviderError::Exhausted(request.stage))
    }
}
