//! Record/replay cassettes.
//!
//! A cassette maps a request fingerprint (SHA-256 over the canonical JSON of
//! model id, messages and temperature) to the recorded reply. Files are JSON
//! lines sorted by fingerprint so re-recording the same requests yields the
//! same bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, ChatBackend, ChatMessage, ChatRequest, ChatResponse};

#[derive(Serialize)]
struct Canonical<'a> {
    model_id: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

/// Hex SHA-256 of the request's canonical serialization.
pub fn fingerprint(req: &ChatRequest) -> String {
    let canonical = Canonical {
        model_id: &req.model_id,
        messages: &req.messages,
        temperature: req.temperature,
    };
    let bytes = serde_json::to_vec(&canonical).expect("request serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Human-readable summary stored next to each fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestFields {
    pub model_id: String,
    pub temperature: f64,
    pub message_count: usize,
    /// First line of the final message, truncated.
    pub last_message_head: String,
}

impl DigestFields {
    fn of(req: &ChatRequest) -> Self {
        let head: String = req
            .last_content()
            .lines()
            .next()
            .unwrap_or("")
            .chars()
            .take(80)
            .collect();
        DigestFields {
            model_id: req.model_id.clone(),
            temperature: req.temperature,
            message_count: req.messages.len(),
            last_message_head: head,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub request_digest_fields: DigestFields,
    pub response_content: String,
    pub latency_s: f64,
}

impl CassetteEntry {
    pub fn new(req: &ChatRequest, resp: &ChatResponse) -> Self {
        CassetteEntry {
            fingerprint: fingerprint(req),
            request_digest_fields: DigestFields::of(req),
            response_content: resp.content.clone(),
            latency_s: resp.latency_s,
        }
    }
}

#[derive(Debug, Default)]
pub struct Cassette {
    entries: RwLock<BTreeMap<String, CassetteEntry>>,
}

impl Cassette {
    pub fn new() -> Self {
        Cassette::default()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, BackendError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CassetteEntry = serde_json::from_str(line)
                .map_err(|e| BackendError::Config(format!("cassette line {}: {e}", idx + 1)))?;
            if entries.contains_key(&entry.fingerprint) {
                return Err(BackendError::DuplicateFingerprint(entry.fingerprint));
            }
            entries.insert(entry.fingerprint.clone(), entry);
        }
        Ok(Cassette {
            entries: RwLock::new(entries),
        })
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("cassette {}: {e}", path.display())))?;
        Cassette::from_jsonl(&text)
    }

    /// Load the cassette if the file exists, otherwise start empty.
    pub fn load_or_new(path: &Path) -> Result<Self, BackendError> {
        if path.exists() {
            Cassette::load(path)
        } else {
            Ok(Cassette::new())
        }
    }

    pub fn to_jsonl(&self) -> String {
        let entries = self.entries.read().expect("cassette lock");
        let mut out = String::new();
        for entry in entries.values() {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let io = |e: std::io::Error| BackendError::Config(format!("cassette {}: {e}", path.display()));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut file = std::fs::File::create(path).map_err(io)?;
        file.write_all(self.to_jsonl().as_bytes()).map_err(io)
    }

    pub fn get(&self, fingerprint: &str) -> Option<CassetteEntry> {
        self.entries.read().expect("cassette lock").get(fingerprint).cloned()
    }

    pub fn insert(&self, entry: CassetteEntry, overwrite: bool) -> Result<(), BackendError> {
        let mut entries = self.entries.write().expect("cassette lock");
        if !overwrite && entries.contains_key(&entry.fingerprint) {
            return Err(BackendError::DuplicateFingerprint(entry.fingerprint));
        }
        entries.insert(entry.fingerprint.clone(), entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cassette lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Serves recorded replies; unknown requests are a protocol error.
pub struct ReplayBackend {
    cassette: Arc<Cassette>,
    max_in_flight: usize,
}

impl ReplayBackend {
    pub fn new(cassette: Arc<Cassette>) -> Self {
        ReplayBackend {
            cassette,
            max_in_flight: 1,
        }
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        req.validate()?;
        let fp = fingerprint(req);
        let entry = self
            .cassette
            .get(&fp)
            .ok_or_else(|| BackendError::Protocol(format!("cassette miss for {fp}")))?;
        Ok(ChatResponse::new(entry.response_content, 0.0))
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}

/// Forwards to an inner backend and stores each successful reply.
pub struct RecordingBackend<B> {
    inner: B,
    cassette: Arc<Cassette>,
    overwrite: bool,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, cassette: Arc<Cassette>, overwrite: bool) -> Self {
        RecordingBackend {
            inner,
            cassette,
            overwrite,
        }
    }

    pub fn cassette(&self) -> &Arc<Cassette> {
        &self.cassette
    }

    /// Complete a request and return the entry that was stored for it.
    pub fn record(&self, req: &ChatRequest) -> Result<(ChatResponse, CassetteEntry), BackendError> {
        req.validate()?;
        let fp = fingerprint(req);
        if !self.overwrite && self.cassette.get(&fp).is_some() {
            return Err(BackendError::DuplicateFingerprint(fp));
        }
        let resp = self.inner.complete(req)?;
        let entry = CassetteEntry::new(req, &resp);
        self.cassette.insert(entry.clone(), self.overwrite)?;
        Ok((resp, entry))
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, BackendError> {
        self.record(req).map(|(resp, _)| resp)
    }

    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }
}
