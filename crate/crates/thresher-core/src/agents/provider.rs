//! Chat completion providers: a live HTTP client speaking the
//! chat-completions wire format, and a deterministic mock for offline runs
//! and replay.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::journal::read_journal;
use super::prompts::{FAST_CLEAN_INPUT_MARKER, SAFE_CLEAN_INPUT_MARKER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// Stable fingerprint of the full request. Mock responses and journal
    /// replay are keyed by this, so it covers every request field.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("chat request serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }

    pub fn last_user_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    pub fn system_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}")]
    Http { status: u16 },
    #[error("provider response had no message content")]
    MissingContent,
    #[error("no canned response for request digest {digest}")]
    NoCannedResponse { digest: String },
    #[error("environment variable {var} is not set")]
    MissingApiKey { var: String },
}

/// A synchronous chat-completion backend. Implementations must be safe to
/// call from worker threads.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

/// What the mock does for a request it has no canned response for.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum MockFallback {
    /// Answer as an "agent that changes nothing": cleaners echo their
    /// input, the splitter returns one chunk, judges score 50.
    #[default]
    Identity,
    /// Fail the call, as a live provider outage would.
    Error,
    /// Return this exact string.
    Fixed(String),
}

/// Deterministic offline provider: canned responses keyed by request
/// digest, with a configurable fallback for unknown requests.
#[derive(Debug, Default)]
pub struct MockChatProvider {
    canned: HashMap<String, String>,
    fallback: MockFallback,
}

impl MockChatProvider {
    pub fn new(fallback: MockFallback) -> Self {
        MockChatProvider { canned: HashMap::new(), fallback }
    }

    /// Register a canned response for a request.
    pub fn respond_to(mut self, request: &ChatRequest, response: &str) -> Self {
        self.canned.insert(request.digest(), response.to_string());
        self
    }

    pub fn insert(&mut self, digest: String, response: String) {
        self.canned.insert(digest, response);
    }

    /// Load canned responses from a directory of `<digest>.txt` files.
    pub fn from_dir(dir: &Path, fallback: MockFallback) -> std::io::Result<Self> {
        let mut canned = HashMap::new();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            if stem.len() == 64 && stem.bytes().all(|b| b.is_ascii_hexdigit()) {
                canned.insert(stem.to_string(), std::fs::read_to_string(&path)?);
            }
        }
        Ok(MockChatProvider { canned, fallback })
    }

    /// Replay a journal: every successful call becomes a canned response.
    /// Later records win, so a request that failed validation and was
    /// retried replays its final answer.
    pub fn from_journal(path: &Path, fallback: MockFallback) -> std::io::Result<Self> {
        let mut canned = HashMap::new();
        for record in read_journal(path)? {
            if let Some(response) = record.response {
                canned.insert(record.request_digest, response);
            }
        }
        Ok(MockChatProvider { canned, fallback })
    }

    pub fn canned_len(&self) -> usize {
        self.canned.len()
    }

    /// The identity answer for a request, inferred from prompt markers.
    fn identity_response(request: &ChatRequest) -> String {
        let user = request.last_user_content().unwrap_or("");
        if let Some(idx) = user.rfind(SAFE_CLEAN_INPUT_MARKER) {
            return user[idx + SAFE_CLEAN_INPUT_MARKER.len()..].to_string();
        }
        if let Some(idx) = user.rfind(FAST_CLEAN_INPUT_MARKER) {
            return user[idx + FAST_CLEAN_INPUT_MARKER.len()..].to_string();
        }
        let system = request.system_content().unwrap_or("");
        if system.starts_with("Split the input text") {
            return format!("Chunk A:\n{user}");
        }
        if system.contains("single integer") || user.contains("single integer") {
            return "50".to_string();
        }
        if system.contains("ranking") || user.contains("ranking") {
            return "1".to_string();
        }
        user.to_string()
    }
}

impl ChatProvider for MockChatProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let digest = request.digest();
        if let Some(response) = self.canned.get(&digest) {
            return Ok(response.clone());
        }
        match &self.fallback {
            MockFallback::Identity => Ok(Self::identity_response(request)),
            MockFallback::Error => Err(ProviderError::NoCannedResponse { digest }),
            MockFallback::Fixed(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Debug, Deserialize)]
struct WireResponseMessage {
    content: Option<String>,
}

/// HTTP client for any endpoint speaking the `POST /chat/completions`
/// convention with bearer-token auth.
pub struct LiveChatProvider {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for LiveChatProvider {
    /// Never prints the API key.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveChatProvider").field("endpoint", &self.endpoint).finish()
    }
}

impl LiveChatProvider {
    /// `base_url` is the API root (e.g. `https://api.example.com/v1`); the
    /// key is read from the environment variable named `api_key_env`.
    pub fn new(base_url: &str, api_key_env: &str, timeout: Duration) -> Result<Self, ProviderError> {
        let api_key = std::env::var(api_key_env)
            .map_err(|_| ProviderError::MissingApiKey { var: api_key_env.to_string() })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Ok(LiveChatProvider {
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
            agent,
        })
    }
}

impl ChatProvider for LiveChatProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let messages: Vec<WireMessage> = request
            .messages
            .iter()
            .map(|m| WireMessage {
                role: match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                },
                content: &m.content,
            })
            .collect();
        let body = serde_json::json!({
            "model": request.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": messages,
        });

        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(status) => ProviderError::Http { status },
                other => ProviderError::Transport(other.to_string()),
            })?;

        let parsed: WireResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or(ProviderError::MissingContent)
    }
}
