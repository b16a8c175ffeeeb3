//! Chat-completion backends.
//!
//! Every backend answers a [`ChatRequest`] with a [`ChatResponse`] or a
//! [`BackendError`]. A timeout is an ordinary outcome: callers record the
//! affected sample as missing instead of aborting, and timeouts are never
//! retried.

mod cassette;
mod http;
mod scripted;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cassette::{fingerprint, Cassette, CassetteEntry, DigestFields, RecordingBackend, ReplayBackend};
pub use http::HttpChatBackend;
pub use scripted::{ScriptRule, ScriptStep, ScriptedBackend};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("no reply within {after_s} s")]
    Timeout { after_s: f64 },
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("auth: {0}")]
    Auth(String),
    #[error("cassette already holds fingerprint {0}")]
    DuplicateFingerprint(String),
    #[error("backend config: {0}")]
    Config(String),
}

impl BackendError {
    pub fn is_timeout(&self) -> bool {
        matches!(self, BackendError::Timeout { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
}

impl ChatRequest {
    /// Check the request before it is sent anywhere.
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.is_empty() {
            return Err(BackendError::Config("request has no messages".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::Config(format!(
                "invalid temperature {}",
                self.temperature
            )));
        }
        if self.max_output_tokens == Some(0) {
            return Err(BackendError::Config("max_output_tokens must be positive".into()));
        }
        if let Some(m) = self
            .messages
            .iter()
            .find(|m| m.role != Role::System && m.content.trim().is_empty())
        {
            return Err(BackendError::Config(format!("empty {:?} message", m.role)));
        }
        Ok(())
    }

    /// Content of the final message, which is what scripted rules match on.
    pub fn last_content(&self) -> &str {
        self.messages.last().map(|m| m.content.as_str()).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
}

impl ChatResponse {
    pub fn new(content: impl Into<String>, latency_s: f64) -> Self {
        ChatResponse {
            content: content.into(),
            latency_s,
            prompt_tokens: None,
            completion_tokens: None,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError>;

    /// Number of requests the backend accepts concurrently.
    fn max_in_flight(&self) -> usize {
        1
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Arc<B> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        (**self).complete(req)
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        (**self).complete(req)
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Replay,
    Scripted,
}

pub const DEFAULT_TIMEOUT_S: f64 = 3600.0;

/// Backend description, usually read from a TOML spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default = "default_auth_env")]
    pub auth_env_var: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First backoff interval; later retries double it.
    #[serde(default = "default_backoff")]
    pub retry_backoff_s: f64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_model")]
    pub model_id: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub max_output_tokens: Option<u32>,
    /// Cassette file for `replay`.
    #[serde(default)]
    pub cassette: Option<PathBuf>,
    /// Script file for `scripted`.
    #[serde(default)]
    pub script: Option<PathBuf>,
}

fn default_auth_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> f64 {
    1.0
}
fn default_in_flight() -> usize {
    1
}
fn default_model() -> String {
    "gpt-4".into()
}

impl BackendSpec {
    pub fn new(kind: BackendKind) -> Self {
        BackendSpec {
            kind,
            endpoint_url: String::new(),
            auth_env_var: default_auth_env(),
            timeout_s: default_timeout(),
            max_retries: default_retries(),
            retry_backoff_s: default_backoff(),
            max_in_flight: default_in_flight(),
            model_id: default_model(),
            temperature: 0.0,
            max_output_tokens: None,
            cassette: None,
            script: None,
        }
    }

    /// Parse a TOML spec. Relative `cassette` and `script` paths are resolved
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, BackendError> {
        let mut spec: BackendSpec = toml::from_str(text).map_err(|e| BackendError::Config(e.to_string()))?;
        for p in [&mut spec.cassette, &mut spec.script].into_iter().flatten() {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        BackendSpec::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(BackendError::Config(format!(
                "timeout_s must be positive, got {}",
                self.timeout_s
            )));
        }
        if self.max_in_flight == 0 {
            return Err(BackendError::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.retry_backoff_s >= 0.0 && self.retry_backoff_s.is_finite()) {
            return Err(BackendError::Config("retry_backoff_s must be non-negative".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::Config(format!(
                "invalid temperature {}",
                self.temperature
            )));
        }
        if self.kind == BackendKind::HttpChat && self.endpoint_url.trim().is_empty() {
            return Err(BackendError::Config("http_chat requires endpoint_url".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(self.timeout_s)
    }

    /// Request skeleton carrying this spec's model settings.
    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model_id: self.model_id.clone(),
            messages,
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
        }
    }
}

/// Instantiate the backend a spec describes. `cassette_override` replaces
/// the spec's own cassette path for replay backends.
pub fn build_backend(
    spec: &BackendSpec,
    cassette_override: Option<&Path>,
) -> Result<Box<dyn ChatBackend>, BackendError> {
    spec.validate()?;
    Ok(match spec.kind {
        BackendKind::HttpChat => Box::new(HttpChatBackend::from_spec(spec)?),
        BackendKind::Replay => {
            let path = cassette_override
                .or(spec.cassette.as_deref())
                .ok_or_else(|| BackendError::Config("replay backend needs a cassette".into()))?;
            Box::new(ReplayBackend::new(Arc::new(Cassette::load(path)?)).with_max_in_flight(spec.max_in_flight))
        }
        BackendKind::Scripted => {
            let path = spec
                .script
                .as_deref()
                .ok_or_else(|| BackendError::Config("scripted backend needs a script file".into()))?;
            Box::new(ScriptedBackend::load(path, spec.timeout())?.with_max_in_flight(spec.max_in_flight))
        }
    })
}

/// One-shot completion against the backend a spec describes.
pub fn complete(spec: &BackendSpec, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
    build_backend(spec, None)?.complete(req)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub mean_s: f64,
    pub p50_s: f64,
    pub max_s: f64,
    pub n_success: usize,
    pub n_timeout: usize,
}

/// Latency statistics over successful calls; timeouts are counted, not averaged.
pub fn latency_summary(outcomes: &[Result<ChatResponse, BackendError>]) -> LatencySummary {
    let mut latencies: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok().map(|r| r.latency_s))
        .collect();
    let n_timeout = outcomes
        .iter()
        .filter(|o| matches!(o, Err(e) if e.is_timeout()))
        .count();
    latencies.sort_by(f64::total_cmp);
    let n = latencies.len();
    if n == 0 {
        return LatencySummary {
            mean_s: 0.0,
            p50_s: 0.0,
            max_s: 0.0,
            n_success: 0,
            n_timeout,
        };
    }
    let p50_s = if n % 2 == 1 {
        latencies[n / 2]
    } else {
        (latencies[n / 2 - 1] + latencies[n / 2]) / 2.0
    };
    LatencySummary {
        mean_s: latencies.iter().sum::<f64>() / n as f64,
        p50_s,
        max_s: latencies[n - 1],
        n_success: n,
        n_timeout,
    }
}
