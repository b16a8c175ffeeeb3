//! Scripted backend for tests and fixture recording.
//!
//! Replies come from a fixed sequence, from rules keyed on the content of
//! the final message, or from a closure. A step whose delay exceeds the
//! configured timeout sleeps for the timeout and then reports
//! [`BackendError::Timeout`], the same way a stalled live call would.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use super::{BackendError, ChatBackend, ChatRequest, ChatResponse};

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptStep {
    Reply {
        content: String,
        delay: Duration,
    },
    /// Never answers; always ends in a timeout.
    Stall,
    TransportFailure(String),
}

impl ScriptStep {
    pub fn reply(content: impl Into<String>) -> Self {
        ScriptStep::Reply {
            content: content.into(),
            delay: Duration::ZERO,
        }
    }

    pub fn delayed(content: impl Into<String>, delay: Duration) -> Self {
        ScriptStep::Reply {
            content: content.into(),
            delay,
        }
    }
}

/// Reply with `step` when the final message contains `needle`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptRule {
    pub needle: String,
    pub step: ScriptStep,
}

type StepFn = dyn Fn(&ChatRequest) -> ScriptStep + Send + Sync;

enum Source {
    Sequence(Mutex<VecDeque<ScriptStep>>),
    Rules {
        rules: Vec<ScriptRule>,
        fallback: Option<ScriptStep>,
    },
    Func(Box<StepFn>),
}

pub struct ScriptedBackend {
    source: Source,
    timeout: Duration,
    max_in_flight: usize,
}

impl ScriptedBackend {
    /// Steps are consumed in call order; running out is a protocol error.
    pub fn sequence(timeout: Duration, steps: Vec<ScriptStep>) -> Self {
        ScriptedBackend::with_source(Source::Sequence(Mutex::new(steps.into())), timeout)
    }

    /// First rule whose needle occurs in the final message wins.
    pub fn rules(timeout: Duration, rules: Vec<ScriptRule>, fallback: Option<ScriptStep>) -> Self {
        ScriptedBackend::with_source(Source::Rules { rules, fallback }, timeout)
    }

    pub fn from_fn(timeout: Duration, f: impl Fn(&ChatRequest) -> ScriptStep + Send + Sync + 'static) -> Self {
        ScriptedBackend::with_source(Source::Func(Box::new(f)), timeout)
    }

    /// Every call stalls past the timeout.
    pub fn always_timeout(timeout: Duration) -> Self {
        ScriptedBackend::from_fn(timeout, |_| ScriptStep::Stall)
    }

    fn with_source(source: Source, timeout: Duration) -> Self {
        ScriptedBackend {
            source,
            timeout,
            max_in_flight: 1,
        }
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    /// Load a TOML script with `[[rules]]` entries and an optional `[default]`.
    ///
    /// Each entry takes `reply` or `reply_file` (relative to the script),
    /// or `stall = true`, or `fail = "message"`, plus an optional `delay_s`.
    pub fn load(path: &Path, timeout: Duration) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("script {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ScriptedBackend::from_toml_str(&text, base, timeout)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path, timeout: Duration) -> Result<Self, BackendError> {
        let file: ScriptFile = toml::from_str(text).map_err(|e| BackendError::Config(format!("script: {e}")))?;
        let rules = file
            .rules
            .into_iter()
            .map(|r| {
                let needle = r
                    .when_contains
                    .clone()
                    .ok_or_else(|| BackendError::Config("script rule without when_contains".into()))?;
                Ok(ScriptRule {
                    needle,
                    step: r.into_step(base_dir)?,
                })
            })
            .collect::<Result<Vec<_>, BackendError>>()?;
        let fallback = file.default.map(|d| d.into_step(base_dir)).transpose()?;
        Ok(ScriptedBackend::rules(timeout, rules, fallback))
    }

    fn next_step(&self, req: &ChatRequest) -> Result<ScriptStep, BackendError> {
        match &self.source {
            Source::Sequence(queue) => queue
                .lock()
                .expect("script lock")
                .pop_front()
                .ok_or_else(|| BackendError::Protocol("script exhausted".into())),
            Source::Rules { rules, fallback } => {
                let last = req.last_content();
                rules
                    .iter()
                    .find(|r| last.contains(&r.needle))
                    .map(|r| r.step.clone())
                    .or_else(|| fallback.clone())
                    .ok_or_else(|| BackendError::Protocol("no script rule matches the request".into()))
            }
            Source::Func(f) => Ok(f(req)),
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        req.validate()?;
        let timed_out = || BackendError::Timeout {
            after_s: self.timeout.as_secs_f64(),
        };
        match self.next_step(req)? {
            ScriptStep::Reply { content, delay } => {
                if delay > self.timeout {
                    std::thread::sleep(self.timeout);
                    return Err(timed_out());
                }
                std::thread::sleep(delay);
                Ok(ChatResponse::new(content, delay.as_secs_f64()))
            }
            ScriptStep::Stall => {
                std::thread::sleep(self.timeout);
                Err(timed_out())
            }
            ScriptStep::TransportFailure(msg) => Err(BackendError::Transport(msg)),
        }
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    #[serde(default)]
    rules: Vec<RuleEntry>,
    #[serde(default)]
    default: Option<RuleEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    #[serde(default)]
    when_contains: Option<String>,
    #[serde(default)]
    reply: Option<String>,
    #[serde(default)]
    reply_file: Option<PathBuf>,
    #[serde(default)]
    delay_s: f64,
    #[serde(default)]
    stall: bool,
    #[serde(default)]
    fail: Option<String>,
}

impl RuleEntry {
    fn into_step(self, base_dir: &Path) -> Result<ScriptStep, BackendError> {
        let choices = usize::from(self.reply.is_some())
            + usize::from(self.reply_file.is_some())
            + usize::from(self.stall)
            + usize::from(self.fail.is_some());
        if choices != 1 {
            return Err(BackendError::Config(
                "each script entry needs exactly one of reply, reply_file, stall, fail".into(),
            ));
        }
        if !(self.delay_s >= 0.0 && self.delay_s.is_finite()) {
            return Err(BackendError::Config("delay_s must be non-negative".into()));
        }
        let delay = Duration::from_secs_f64(self.delay_s);
        if self.stall {
            return Ok(ScriptStep::Stall);
        }
        if let Some(msg) = self.fail {
            return Ok(ScriptStep::TransportFailure(msg));
        }
        let content = match (self.reply, self.reply_file) {
            (Some(text), _) => text,
            (None, Some(file)) => {
                let path = base_dir.join(file);
                std::fs::read_to_string(&path)
                    .map_err(|e| BackendError::Config(format!("reply file {}: {e}", path.display())))?
            }
            (None, None) => unreachable!("checked above"),
        };
        Ok(ScriptStep::Reply { content, delay })
    }
}
