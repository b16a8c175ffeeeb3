//! Runs the classification task in batches and the three-stage PHQ-8
//! conversation per participant.
//!
//! Per-participant failures (timeouts, transport errors, unparsable replies)
//! become missing values in the results; they never abort a run. Batches
//! and sessions run concurrently up to the backend's `max_in_flight`, and
//! results come back in input order.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    latency_summary, BackendError, BackendSpec, ChatBackend, ChatMessage, ChatResponse, LatencySummary,
};
use crate::parser::{participant_section, ParseOutcome, ParseRuleSet, Verdict, RULESET_VERSION};
use crate::prompt::{PromptAssembler, PromptError, LIKELIHOOD_LINE, STAGE1_TOTAL_LINE, STAGE2_TOTAL_LINE};
use crate::transcript::{JointDialogue, PHQ8_ITEMS, PHQ8_MAX_TOTAL};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("batch_size must be at least 1")]
    BatchSize,
    #[error("external score {0} is outside 0..=24")]
    ExternalScore(u8),
    #[error("writing raw reply: {0}")]
    Sink(#[from] std::io::Error),
}

/// Receives every reply before it is parsed.
pub trait RawReplySink: Sync {
    fn write_raw(&self, participant_id: u32, stage: &str, content: &str) -> std::io::Result<()>;
}

/// Keeps raw replies in memory, keyed by `(participant_id, stage)`.
#[derive(Debug, Default)]
pub struct MemorySink(Mutex<BTreeMap<(u32, String), String>>);

impl MemorySink {
    pub fn get(&self, participant_id: u32, stage: &str) -> Option<String> {
        self.0
            .lock()
            .expect("sink lock")
            .get(&(participant_id, stage.to_string()))
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("sink lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RawReplySink for MemorySink {
    fn write_raw(&self, participant_id: u32, stage: &str, content: &str) -> std::io::Result<()> {
        self.0
            .lock()
            .expect("sink lock")
            .insert((participant_id, stage.to_string()), content.to_string());
        Ok(())
    }
}

/// Parsing bookkeeping shared by every result type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseInfo {
    pub matched_rule: Option<String>,
    pub diagnostics: Vec<String>,
    /// Backend or prompt failure that left the value missing.
    pub error: Option<String>,
    pub repair_attempts: u32,
}

impl ParseInfo {
    fn from_outcome<V>(outcome: &ParseOutcome<V>) -> Self {
        ParseInfo {
            matched_rule: outcome.matched_rule.clone(),
            diagnostics: outcome.diagnostics.clone(),
            error: None,
            repair_attempts: 0,
        }
    }

    fn failed(error: String) -> Self {
        ParseInfo {
            error: Some(error),
            ..ParseInfo::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task1Assessment {
    pub participant_id: u32,
    pub likelihood: Option<u8>,
    pub rationale: String,
    pub raw_reply: String,
    pub parse: ParseInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phq8Estimate {
    pub total: Option<u8>,
    pub addends: Option<[u8; PHQ8_ITEMS]>,
    pub raw_reply: String,
    pub parse: ParseInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemizedBreakdown {
    pub item_scores: Option<[u8; PHQ8_ITEMS]>,
    pub total: Option<u8>,
    pub raw_reply: String,
    pub parse: ParseInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependentReview {
    pub verdict: Verdict,
    pub revised_total: Option<u8>,
    pub external_score: u8,
    pub raw_reply: String,
    pub parse: ParseInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task2Session {
    pub participant_id: u32,
    pub stage1: Phq8Estimate,
    pub stage2: ItemizedBreakdown,
    pub stage3: IndependentReview,
    pub transcript_of_messages: Vec<ChatMessage>,
}

impl Task2Session {
    /// True when any stage lacks its primary value.
    pub fn has_na(&self) -> bool {
        self.stage1.total.is_none() || self.stage2.total.is_none() || self.stage3.revised_total.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub task: u8,
    pub config_name: String,
    pub model_id: String,
    pub batch_size: usize,
    pub repair_retries: u32,
    pub ruleset_version: String,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
    pub cassette: Option<String>,
    pub n_participants: usize,
    pub n_na: usize,
    /// Missing values per stage, task 2 only.
    pub n_na_by_stage: Option<[usize; 3]>,
    pub latency: LatencySummary,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub run_id: String,
    pub batch_size: usize,
    /// Format-clarification re-asks allowed per unparsable reply.
    pub repair_retries: u32,
    pub rules: ParseRuleSet,
    /// Recorded in the manifest only.
    pub cassette: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            run_id: "run".into(),
            batch_size: 1,
            repair_retries: 1,
            rules: ParseRuleSet::v1(),
            cassette: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Task1Run {
    pub assessments: Vec<Task1Assessment>,
    pub manifest: RunManifest,
}

#[derive(Debug, Clone)]
pub struct Task2Run {
    pub sessions: Vec<Task2Session>,
    pub manifest: RunManifest,
}

type Calls = Vec<Result<ChatResponse, BackendError>>;

/// Outcome of [`repair_retry`]: every reply received, and whether the last
/// one was accepted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Repair {
    pub replies: Vec<String>,
    pub accepted: bool,
}

/// Re-ask with `clarification` until `accept` passes, at most `budget`
/// times. The exchange is appended to `conversation`. A backend failure
/// ends the attempts.
pub fn repair_retry(
    backend: &dyn ChatBackend,
    spec: &BackendSpec,
    conversation: &mut Vec<ChatMessage>,
    clarification: &str,
    budget: u32,
    accept: impl Fn(&str) -> bool,
) -> Repair {
    let mut calls = Vec::new();
    repair_logged(backend, spec, conversation, clarification, budget, accept, &mut calls)
}

fn repair_logged(
    backend: &dyn ChatBackend,
    spec: &BackendSpec,
    conversation: &mut Vec<ChatMessage>,
    clarification: &str,
    budget: u32,
    accept: impl Fn(&str) -> bool,
    calls: &mut Calls,
) -> Repair {
    let mut repair = Repair::default();
    for _ in 0..budget {
        conversation.push(ChatMessage::user(clarification));
        let Ok(reply) = call(backend, spec, conversation, calls) else {
            break;
        };
        push_reply(conversation, &reply);
        repair.accepted = accept(&reply);
        repair.replies.push(reply);
        if repair.accepted {
            break;
        }
    }
    repair
}

fn call(
    backend: &dyn ChatBackend,
    spec: &BackendSpec,
    messages: &[ChatMessage],
    calls: &mut Calls,
) -> Result<String, BackendError> {
    let outcome = backend.complete(&spec.request(messages.to_vec()));
    let content = outcome.as_ref().map(|r| r.content.clone()).map_err(Clone::clone);
    calls.push(outcome);
    content
}

fn push_reply(messages: &mut Vec<ChatMessage>, reply: &str) {
    if !reply.trim().is_empty() {
        messages.push(ChatMessage::assistant(reply));
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Map `f` over `items` on up to `workers` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().expect("slot lock") = Some(f(item));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every slot is filled"))
        .collect()
}

fn task1_clarification(ids: &[u32]) -> String {
    let ids = ids.iter().map(u32::to_string).collect::<Vec<_>>().join(", ");
    format!(
        "I could not find a valid likelihood rating for participant(s) {ids}. For each of them, write a heading \
\"Participant <id>:\" followed by a line exactly of the form \"{LIKELIHOOD_LINE}\", where N is a whole number from 1 to 7."
    )
}

fn stage1_clarification() -> String {
    format!(
        "Please restate your estimate as a single line of the form \"{STAGE1_TOTAL_LINE}\": the eight item scores \
(each 0 to 3) in questionnaire order, then their total T."
    )
}

fn stage2_clarification() -> String {
    format!(
        "Please restate the breakdown with one \"Score: k\" line for each of the eight PHQ-8 items (k from 0 to 3), \
and close with a line of the form \"{STAGE2_TOTAL_LINE}\"."
    )
}

fn stage3_clarification(external_score: u8) -> String {
    format!(
        "Please state plainly whether you agree with the score of {external_score}, writing either \"I agree\" or \
\"I do not agree\", and give your own total as \"revised PHQ-8 score of T\"."
    )
}

struct StageResult<V> {
    outcome: ParseOutcome<V>,
    raw_reply: String,
    info: ParseInfo,
}

pub struct Orchestrator<'a> {
    backend: &'a dyn ChatBackend,
    spec: &'a BackendSpec,
    assembler: PromptAssembler<'a>,
    options: RunOptions,
    sink: Option<&'a dyn RawReplySink>,
}

impl<'a> Orchestrator<'a> {
    /// `spec` supplies model id, temperature and output limit for requests.
    pub fn new(backend: &'a dyn ChatBackend, spec: &'a BackendSpec, assembler: PromptAssembler<'a>) -> Self {
        Orchestrator {
            backend,
            spec,
            assembler,
            options: RunOptions::default(),
            sink: None,
        }
    }

    pub fn with_options(mut self, options: RunOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_sink(mut self, sink: &'a dyn RawReplySink) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn options(&self) -> &RunOptions {
        &self.options
    }

    fn write_raw(&self, participant_id: u32, stage: &str, content: &str) -> std::io::Result<()> {
        match self.sink {
            Some(sink) => sink.write_raw(participant_id, stage, content),
            None => Ok(()),
        }
    }

    fn manifest(&self, task: u8, started_at: u64, n_participants: usize, n_na: usize, calls: &Calls) -> RunManifest {
        RunManifest {
            run_id: self.options.run_id.clone(),
            task,
            config_name: self.assembler.config().name.clone(),
            model_id: self.spec.model_id.clone(),
            batch_size: self.options.batch_size,
            repair_retries: self.options.repair_retries,
            ruleset_version: RULESET_VERSION.to_string(),
            started_at,
            finished_at: unix_now(),
            cassette: self.options.cassette.clone(),
            n_participants,
            n_na,
            n_na_by_stage: None,
            latency: latency_summary(calls),
        }
    }

    /// Likelihood ratings for every dialogue, one request per consecutive batch.
    pub fn run_task1(&self, dialogues: &[JointDialogue]) -> Result<Task1Run, OrchestratorError> {
        if self.options.batch_size == 0 {
            return Err(OrchestratorError::BatchSize);
        }
        let started_at = unix_now();
        let batches: Vec<&[JointDialogue]> = dialogues.chunks(self.options.batch_size).collect();
        let results = parallel_map(&batches, self.backend.max_in_flight(), |batch| self.task1_batch(batch));
        let mut assessments = Vec::with_capacity(dialogues.len());
        let mut calls = Vec::new();
        for r in results {
            let (batch, batch_calls) = r?;
            assessments.extend(batch);
            calls.extend(batch_calls);
        }
        let n_na = assessments.iter().filter(|a| a.likelihood.is_none()).count();
        let manifest = self.manifest(1, started_at, assessments.len(), n_na, &calls);
        Ok(Task1Run { assessments, manifest })
    }

    fn task1_batch(&self, batch: &[JointDialogue]) -> Result<(Vec<Task1Assessment>, Calls), OrchestratorError> {
        let ids: Vec<u32> = batch.iter().map(|d| d.participant_id).collect();
        let mut calls = Vec::new();
        let all_failed = |error: String| -> Vec<Task1Assessment> {
            ids.iter()
                .map(|&participant_id| Task1Assessment {
                    participant_id,
                    likelihood: None,
                    rationale: String::new(),
                    raw_reply: String::new(),
                    parse: ParseInfo::failed(error.clone()),
                })
                .collect()
        };
        let refs: Vec<&JointDialogue> = batch.iter().collect();
        let prompt = match self.assembler.task1(&refs) {
            Ok(p) => p,
            Err(e) => return Ok((all_failed(format!("prompt: {e}")), calls)),
        };
        let mut messages = vec![ChatMessage::system(prompt.system), ChatMessage::user(prompt.user)];
        let reply = match call(self.backend, self.spec, &messages, &mut calls) {
            Ok(r) => r,
            Err(e) => return Ok((all_failed(e.to_string()), calls)),
        };
        for &id in &ids {
            self.write_raw(id, "task1", &reply)?;
        }
        push_reply(&mut messages, &reply);

        let rules = &self.options.rules;
        let mut outcomes = rules.parse_likelihood(&reply, &ids);
        let mut sources: BTreeMap<u32, String> = ids.iter().map(|&id| (id, reply.clone())).collect();
        let mut attempts: BTreeMap<u32, u32> = BTreeMap::new();
        for attempt in 1..=self.options.repair_retries {
            let failed: Vec<u32> = ids.iter().copied().filter(|id| outcomes[id].is_na()).collect();
            if failed.is_empty() {
                break;
            }
            let repair = repair_logged(
                self.backend,
                self.spec,
                &mut messages,
                &task1_clarification(&failed),
                1,
                |_| true,
                &mut calls,
            );
            let Some(repaired) = repair.replies.last() else {
                break;
            };
            let reparsed = rules.parse_likelihood(repaired, &failed);
            for (id, outcome) in reparsed {
                self.write_raw(id, &format!("task1_repair{attempt}"), repaired)?;
                *attempts.entry(id).or_default() += 1;
                let current = outcomes.get_mut(&id).expect("failed ids come from outcomes");
                if outcome.is_na() {
                    current.diagnostics.extend(
                        outcome
                            .diagnostics
                            .into_iter()
                            .map(|d| format!("repair {attempt}: {d}")),
                    );
                } else {
                    let mut outcome = outcome;
                    let mut diagnostics = std::mem::take(&mut current.diagnostics);
                    diagnostics.append(&mut outcome.diagnostics);
                    outcome.diagnostics = diagnostics;
                    *current = outcome;
                    sources.insert(id, repaired.clone());
                }
            }
        }

        let assessments = ids
            .iter()
            .map(|&id| {
                let outcome = &outcomes[&id];
                let raw_reply = sources.remove(&id).unwrap_or_default();
                let rationale = participant_section(&raw_reply, id, ids.len()).unwrap_or_default();
                let mut parse = ParseInfo::from_outcome(outcome);
                parse.repair_attempts = attempts.get(&id).copied().unwrap_or(0);
                Task1Assessment {
                    participant_id: id,
                    likelihood: outcome.value,
                    rationale,
                    raw_reply,
                    parse,
                }
            })
            .collect();
        Ok((assessments, calls))
    }

    /// Three-stage sessions for each `(dialogue, external_score)` pair.
    pub fn run_task2_all(&self, inputs: &[(JointDialogue, u8)]) -> Result<Task2Run, OrchestratorError> {
        if let Some((_, bad)) = inputs.iter().find(|(_, s)| *s > PHQ8_MAX_TOTAL) {
            return Err(OrchestratorError::ExternalScore(*bad));
        }
        let started_at = unix_now();
        let results = parallel_map(inputs, self.backend.max_in_flight(), |(dialogue, score)| {
            self.task2_logged(dialogue, *score)
        });
        let mut sessions = Vec::with_capacity(inputs.len());
        let mut calls = Vec::new();
        for r in results {
            let (session, session_calls) = r?;
            sessions.push(session);
            calls.extend(session_calls);
        }
        let n_na = sessions.iter().filter(|s| s.has_na()).count();
        let by_stage = [
            sessions.iter().filter(|s| s.stage1.total.is_none()).count(),
            sessions.iter().filter(|s| s.stage2.total.is_none()).count(),
            sessions.iter().filter(|s| s.stage3.revised_total.is_none()).count(),
        ];
        let mut manifest = self.manifest(2, started_at, sessions.len(), n_na, &calls);
        manifest.n_na_by_stage = Some(by_stage);
        Ok(Task2Run { sessions, manifest })
    }

    /// One three-stage conversation. Later stages run even when an earlier
    /// one failed.
    pub fn run_task2(&self, dialogue: &JointDialogue, external_score: u8) -> Result<Task2Session, OrchestratorError> {
        if external_score > PHQ8_MAX_TOTAL {
            return Err(OrchestratorError::ExternalScore(external_score));
        }
        self.task2_logged(dialogue, external_score).map(|(s, _)| s)
    }

    fn task2_logged(
        &self,
        dialogue: &JointDialogue,
        external_score: u8,
    ) -> Result<(Task2Session, Calls), OrchestratorError> {
        let pid = dialogue.participant_id;
        let rules = &self.options.rules;
        let mut calls = Vec::new();
        let mut messages = Vec::new();

        let stage1 = match self.assembler.stage1(dialogue) {
            Ok(prompt) => {
                messages.push(ChatMessage::system(prompt.system));
                self.stage(
                    &mut messages,
                    prompt.user,
                    pid,
                    "stage1",
                    &stage1_clarification(),
                    &mut calls,
                    |r| rules.parse_phq8_total(r),
                )?
            }
            Err(e) => self.prompt_failure(e),
        };
        let stage2 = self.stage(
            &mut messages,
            self.assembler.stage2(),
            pid,
            "stage2",
            &stage2_clarification(),
            &mut calls,
            |r| rules.parse_item_breakdown(r),
        )?;
        let stage3_prompt = self
            .assembler
            .stage3(u32::from(external_score))
            .expect("external score checked by caller");
        let stage3 = self.stage(
            &mut messages,
            stage3_prompt,
            pid,
            "stage3",
            &stage3_clarification(external_score),
            &mut calls,
            |r| rules.parse_verdict(r),
        )?;

        let revised_total = match stage3.outcome.value {
            Some(v) => v.revised_total,
            None => rules.parse_revised_total(&stage3.raw_reply).value,
        };
        let session = Task2Session {
            participant_id: pid,
            stage1: Phq8Estimate {
                total: stage1.outcome.value.map(|t| t.total),
                addends: stage1.outcome.value.and_then(|t| t.addends),
                raw_reply: stage1.raw_reply,
                parse: stage1.info,
            },
            stage2: ItemizedBreakdown {
                item_scores: stage2.outcome.value,
                total: stage2.outcome.value.map(|items| items.iter().sum()),
                raw_reply: stage2.raw_reply,
                parse: stage2.info,
            },
            stage3: IndependentReview {
                verdict: stage3.outcome.value.map_or(Verdict::Unclear, |v| v.verdict),
                revised_total,
                external_score,
                raw_reply: stage3.raw_reply,
                parse: stage3.info,
            },
            transcript_of_messages: messages,
        };
        Ok((session, calls))
    }

    fn prompt_failure<V>(&self, e: PromptError) -> StageResult<V> {
        StageResult {
            outcome: ParseOutcome {
                value: None,
                matched_rule: None,
                diagnostics: Vec::new(),
            },
            raw_reply: String::new(),
            info: ParseInfo::failed(format!("prompt: {e}")),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn stage<V>(
        &self,
        messages: &mut Vec<ChatMessage>,
        prompt: String,
        pid: u32,
        stage: &str,
        clarification: &str,
        calls: &mut Calls,
        parse: impl Fn(&str) -> ParseOutcome<V>,
    ) -> Result<StageResult<V>, OrchestratorError> {
        messages.push(ChatMessage::user(prompt));
        let reply = match call(self.backend, self.spec, messages, calls) {
            Ok(r) => r,
            Err(e) => {
                return Ok(StageResult {
                    outcome: ParseOutcome {
                        value: None,
                        matched_rule: None,
                        diagnostics: Vec::new(),
                    },
                    raw_reply: String::new(),
                    info: ParseInfo::failed(e.to_string()),
                })
            }
        };
        self.write_raw(pid, stage, &reply)?;
        push_reply(messages, &reply);
        let mut outcome = parse(&reply);
        let mut raw_reply = reply;
        let mut diagnostics = outcome.diagnostics.clone();
        let mut attempts = 0;
        if outcome.is_na() && self.options.repair_retries > 0 {
            let repair = repair_logged(
                self.backend,
                self.spec,
                messages,
                clarification,
                self.options.repair_retries,
                |r| !parse(r).is_na(),
                calls,
            );
            for (i, r) in repair.replies.iter().enumerate() {
                self.write_raw(pid, &format!("{stage}_repair{}", i + 1), r)?;
                let reparsed = parse(r);
                diagnostics.extend(reparsed.diagnostics.iter().map(|d| format!("repair {}: {d}", i + 1)));
                if !reparsed.is_na() {
                    outcome = reparsed;
                    raw_reply = r.clone();
                }
            }
            attempts = repair.replies.len() as u32;
        }
        let mut info = ParseInfo::from_outcome(&outcome);
        info.diagnostics = diagnostics;
        info.repair_attempts = attempts;
        Ok(StageResult {
            outcome,
            raw_reply,
            info,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendKind, ScriptStep, ScriptedBackend};
    use crate::knowledge::BackgroundConfig;
    use crate::prompt::PromptBundle;
    use std::time::Duration;

    fn dialogue(id: u32) -> JointDialogue {
        JointDialogue {
            participant_id: id,
            text: format!("i am participant {id}./ fine./"),
            utterance_count: 2,
        }
    }

    fn spec() -> BackendSpec {
        BackendSpec::new(BackendKind::Scripted)
    }

    fn likelihood_reply(id: u32) -> String {
        format!(
            "Participant {id}:\nLikelihood of Ongoing Mental Health Disorder: {}/7.",
            id % 7 + 1
        )
    }

    /// Answers every prompt per participant, whatever the batch.
    fn per_participant() -> ScriptedBackend {
        ScriptedBackend::from_fn(Duration::from_secs(1), |req| {
            let text = req.last_content();
            let reply: Vec<String> = (1..=20)
                .filter(|id| text.contains(&format!("[Participant {id}]")))
                .map(likelihood_reply)
                .collect();
            ScriptStep::reply(reply.join("\n\n"))
        })
    }

    #[test]
    fn batches_do_not_change_results() {
        let cfg = BackgroundConfig::empty("no-background");
        let bundle = PromptBundle::default();
        let spec = spec();
        let dialogues: Vec<JointDialogue> = (1..=7).map(dialogue).collect();
        let backend = per_participant();
        let mut runs = Vec::new();
        for batch_size in [1, 2, 3, 7] {
            let orch =
                Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle)).with_options(RunOptions {
                    batch_size,
                    ..RunOptions::default()
                });
            let run = orch.run_task1(&dialogues).unwrap();
            let likes: Vec<Option<u8>> = run.assessments.iter().map(|a| a.likelihood).collect();
            runs.push(likes);
        }
        assert!(runs.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(
            runs[0],
            (1..=7u32).map(|id| Some((id % 7 + 1) as u8)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn empty_and_invalid_inputs() {
        let cfg = BackgroundConfig::empty("no-background");
        let bundle = PromptBundle::default();
        let spec = spec();
        let backend = per_participant();
        let orch = Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle));
        let run = orch.run_task1(&[]).unwrap();
        assert!(run.assessments.is_empty());
        assert_eq!((run.manifest.n_participants, run.manifest.n_na), (0, 0));

        let zero = Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle)).with_options(RunOptions {
            batch_size: 0,
            ..RunOptions::default()
        });
        assert!(matches!(
            zero.run_task1(&[dialogue(1)]),
            Err(OrchestratorError::BatchSize)
        ));
        assert!(matches!(
            orch.run_task2(&dialogue(1), 25),
            Err(OrchestratorError::ExternalScore(25))
        ));
    }

    #[test]
    fn timeouts_become_na() {
        let cfg = BackgroundConfig::empty("no-background");
        let bundle = PromptBundle::default();
        let spec = spec();
        let backend = ScriptedBackend::always_timeout(Duration::from_millis(5)).with_max_in_flight(4);
        let orch = Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle));
        let dialogues: Vec<JointDialogue> = (1..=4).map(dialogue).collect();
        let run = orch.run_task1(&dialogues).unwrap();
        assert_eq!(run.manifest.n_na, 4);
        assert_eq!(run.manifest.latency.n_timeout, 4);
        assert!(run
            .assessments
            .iter()
            .all(|a| a.parse.error.as_deref().is_some_and(|e| e.contains("no reply"))));
    }

    #[test]
    fn repair_recovers_unparsable_reply() {
        let cfg = BackgroundConfig::empty("no-background");
        let bundle = PromptBundle::default();
        let spec = spec();
        let sink = MemorySink::default();

        let backend = ScriptedBackend::sequence(
            Duration::from_secs(1),
            vec![
                ScriptStep::reply("I would rather not say."),
                ScriptStep::reply(likelihood_reply(3)),
            ],
        );
        let orch = Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle)).with_sink(&sink);
        let run = orch.run_task1(&[dialogue(3)]).unwrap();
        assert_eq!(run.assessments[0].likelihood, Some(4));
        assert_eq!(run.assessments[0].parse.repair_attempts, 1);
        assert_eq!(sink.get(3, "task1").as_deref(), Some("I would rather not say."));
        assert!(sink.get(3, "task1_repair1").is_some());

        let no_budget = ScriptedBackend::sequence(Duration::from_secs(1), vec![ScriptStep::reply("no idea")]);
        let orch = Orchestrator::new(&no_budget, &spec, PromptAssembler::new(&cfg, &bundle)).with_options(RunOptions {
            repair_retries: 0,
            ..RunOptions::default()
        });
        let run = orch.run_task1(&[dialogue(3)]).unwrap();
        assert_eq!(run.assessments[0].likelihood, None);
        assert_eq!(run.assessments[0].parse.repair_attempts, 0);
    }

    #[test]
    fn repair_not_invoked_for_parsable_reply() {
        let spec = spec();
        let backend = ScriptedBackend::sequence(Duration::from_secs(1), vec![]);
        let mut conversation = vec![ChatMessage::user("q")];
        let repair = repair_retry(&backend, &spec, &mut conversation, "again", 0, |_| true);
        assert_eq!(repair, Repair::default());
        assert_eq!(conversation.len(), 1);
    }

    #[test]
    fn failed_stage_does_not_stop_later_stages() {
        let cfg = BackgroundConfig::empty("no-background");
        let bundle = PromptBundle::default();
        let spec = spec();
        let stage1 = "Estimated PHQ-8 Score: 1+1+1+1+1+1+1+1=8";
        let backend = ScriptedBackend::sequence(
            Duration::from_millis(20),
            vec![
                ScriptStep::reply(stage1),
                ScriptStep::reply("garbage"),
                ScriptStep::reply("still garbage"),
                ScriptStep::reply("I agree with the assigned score."),
            ],
        );
        let orch = Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle));
        let session = orch.run_task2(&dialogue(9), 0).unwrap();
        assert_eq!(session.stage1.total, Some(8));
        assert_eq!(session.stage2.item_scores, None);
        assert_eq!(session.stage2.parse.repair_attempts, 1);
        assert_eq!(session.stage3.verdict, Verdict::Agree);
        assert_eq!(session.stage3.external_score, 0);

        let users: Vec<&str> = session
            .transcript_of_messages
            .iter()
            .filter(|m| m.role == crate::backend::Role::User)
            .map(|m| m.content.as_str())
            .collect();
        assert!(users[0].contains("[Participant 9]"));
        assert!(users[1].starts_with("Break down"));
        assert!(users.last().unwrap().contains("score of 0"));
    }

    #[test]
    fn session_survives_timeouts() {
        let cfg = BackgroundConfig::empty("no-background");
        let bundle = PromptBundle::default();
        let spec = spec();
        let backend = ScriptedBackend::always_timeout(Duration::from_millis(5));
        let orch = Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle));
        let run = orch.run_task2_all(&[(dialogue(1), 4), (dialogue(2), 12)]).unwrap();
        assert_eq!(run.manifest.n_na, 2);
        assert_eq!(run.manifest.n_na_by_stage, Some([2, 2, 2]));
        assert!(run.sessions.iter().all(|s| s.stage3.verdict == Verdict::Unclear));
        assert_eq!(run.manifest.latency.n_timeout, 6);
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..50).collect();
        let out = parallel_map(&items, 8, |&i| {
            std::thread::sleep(Duration::from_micros((50 - i) * 20));
            i * 2
        });
        assert_eq!(out, items.iter().map(|i| i * 2).collect::<Vec<_>>());
    }
}
