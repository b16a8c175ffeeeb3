//! OpenAI-compatible `/chat/completions` client.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BackendError, BackendSpec, ChatBackend, ChatMessage, ChatRequest, ChatResponse};

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: Option<u64>,
    #[serde(default)]
    completion_tokens: Option<u64>,
}

/// Serialize a request body in the chat-completions wire format.
pub(crate) fn wire_body(req: &ChatRequest) -> String {
    serde_json::to_string(&WireRequest {
        model: &req.model_id,
        messages: &req.messages,
        temperature: req.temperature,
        max_tokens: req.max_output_tokens,
    })
    .expect("request serializes")
}

/// Extract the first choice's content from a response body.
pub(crate) fn parse_wire_response(body: &str, latency_s: f64) -> Result<ChatResponse, BackendError> {
    let wire: WireResponse =
        serde_json::from_str(body).map_err(|e| BackendError::Protocol(format!("malformed response body: {e}")))?;
    let content = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| BackendError::Protocol("response has no choice content".into()))?;
    let usage = wire.usage;
    Ok(ChatResponse {
        content,
        latency_s,
        prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens),
        completion_tokens: usage.as_ref().and_then(|u| u.completion_tokens),
    })
}

pub struct HttpChatBackend {
    agent: ureq::Agent,
    url: String,
    token: String,
    timeout: Duration,
    max_retries: u32,
    backoff: Duration,
    max_in_flight: usize,
}

enum Attempt {
    Done(ChatResponse),
    Retry(BackendError),
}

impl HttpChatBackend {
    /// Resolves the bearer token from the spec's environment variable.
    pub fn from_spec(spec: &BackendSpec) -> Result<Self, BackendError> {
        let token = std::env::var(&spec.auth_env_var)
            .map_err(|_| BackendError::Auth(format!("environment variable {} is not set", spec.auth_env_var)))?;
        Ok(HttpChatBackend::with_token(spec, token))
    }

    pub fn with_token(spec: &BackendSpec, token: impl Into<String>) -> Self {
        let timeout = spec.timeout();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpChatBackend {
            agent,
            url: format!("{}/chat/completions", spec.endpoint_url.trim_end_matches('/')),
            token: token.into(),
            timeout,
            max_retries: spec.max_retries,
            backoff: Duration::from_secs_f64(spec.retry_backoff_s),
            max_in_flight: spec.max_in_flight,
        }
    }

    fn attempt(&self, body: &str) -> Result<Attempt, BackendError> {
        let started = Instant::now();
        let sent = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.token))
            .header("Content-Type", "application/json")
            .send(body);
        let mut resp = match sent {
            Ok(resp) => resp,
            Err(e) => return self.classify(e).map(Attempt::Retry),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(text) => text,
            Err(e) => return self.classify(e).map(Attempt::Retry),
        };
        let latency_s = started.elapsed().as_secs_f64();
        match status {
            200..=299 => parse_wire_response(&text, latency_s).map(Attempt::Done),
            401 | 403 => Err(BackendError::Auth(format!("HTTP {status}: {}", snippet(&text)))),
            429 | 500..=599 => Ok(Attempt::Retry(BackendError::Transport(format!(
                "HTTP {status}: {}",
                snippet(&text)
            )))),
            _ => Err(BackendError::Protocol(format!("HTTP {status}: {}", snippet(&text)))),
        }
    }

    /// Timeouts end the call; everything else at the transport level is retryable.
    fn classify(&self, err: ureq::Error) -> Result<BackendError, BackendError> {
        let timed_out = match &err {
            ureq::Error::Timeout(_) => true,
            ureq::Error::Io(io) => matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock),
            _ => false,
        };
        if timed_out {
            return Err(BackendError::Timeout {
                after_s: self.timeout.as_secs_f64(),
            });
        }
        Ok(BackendError::Transport(err.to_string()))
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        req.validate()?;
        let body = wire_body(req);
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&body)? {
                Attempt::Done(resp) => return Ok(resp),
                Attempt::Retry(err) if attempt >= self.max_retries => return Err(err),
                Attempt::Retry(_) => {
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}
