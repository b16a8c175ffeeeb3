//! Interview transcript ingestion.
//!
//! Transcripts arrive as tab-separated files (`start_time`, `stop_time`,
//! `speaker`, `value`) with one row per utterance. Participant turns are
//! joined into a single dialogue string per participant, each turn suffixed
//! with the `./` marker. Label files carry PHQ-8 totals and the derived
//! binary screen outcome.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokens::TokenCounter;

/// Header row expected at the top of every transcript file.
pub const TRANSCRIPT_HEADER: &str = "start_time\tstop_time\tspeaker\tvalue";

/// Marker appended to each retained participant utterance.
pub const TURN_MARKER: &str = "./";

/// PHQ-8 totals at or above this value count as a positive screen.
pub const PHQ8_POSITIVE_CUTOFF: u8 = 10;

pub const PHQ8_MAX_TOTAL: u8 = 24;
pub const PHQ8_ITEM_MAX: u8 = 3;
pub const PHQ8_ITEMS: usize = 8;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: unknown speaker tag {tag:?}")]
    UnknownSpeaker { line: usize, tag: String },
    #[error("transcript has no data rows")]
    EmptyFile,
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("participant {participant_id}: {reason}")]
    InconsistentLabel { participant_id: u32, reason: String },
    #[error("participant {0} has no label")]
    MissingLabel(u32),
    #[error("participant {participant_id} appears in both {first} and {second} splits")]
    OverlappingSplits {
        participant_id: u32,
        first: SplitName,
        second: SplitName,
    },
    #[error("duplicate participant id {0}")]
    DuplicateParticipant(u32),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    Interviewer,
    Participant,
}

impl Speaker {
    /// The tag used for this speaker in transcript files.
    pub fn tag(self) -> &'static str {
        match self {
            Speaker::Interviewer => "Ellie",
            Speaker::Participant => "Participant",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "Ellie" => Some(Speaker::Interviewer),
            "Participant" => Some(Speaker::Participant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub start_s: f64,
    pub stop_s: f64,
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub participant_id: u32,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointDialogue {
    pub participant_id: u32,
    pub text: String,
    pub utterance_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub participant_id: u32,
    pub phq8_total: u8,
    pub phq8_binary: u8,
    pub item_scores: Option<[u8; PHQ8_ITEMS]>,
}

impl LabelRecord {
    pub fn is_positive(&self) -> bool {
        self.phq8_binary == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        })
    }
}

impl std::str::FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split {other:?} (expected train, dev or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub participant_ids: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub n_total: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    /// `n_positive / n_negative` rounded to two decimals; `None` when there
    /// are no negatives.
    pub ratio: Option<f64>,
}

fn decode(raw: &mut dyn Read) -> Result<String, IngestError> {
    let mut bytes = Vec::new();
    raw.read_to_end(&mut bytes)
        .map_err(|e| IngestError::io(Path::new("<stream>"), e))?;
    String::from_utf8(bytes).map_err(|_| IngestError::Encoding)
}

fn parse_time(cell: &str, line: usize, column: &str) -> Result<f64, IngestError> {
    let value: f64 = cell.trim().parse().map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("{column} {cell:?} is not a number"),
    })?;
    if !value.is_finite() || value < 0.0 {
        return Err(IngestError::MalformedRow {
            line,
            reason: format!("{column} {cell:?} must be a non-negative number"),
        });
    }
    Ok(value)
}

/// Parse one participant's tab-separated transcript.
pub fn parse_transcript(raw: &mut dyn Read, participant_id: u32) -> Result<Transcript, IngestError> {
    let text = decode(raw)?;
    let mut lines = text.lines().enumerate();
    // header row is mandatory but its exact spelling varies between releases
    if lines.next().is_none() {
        return Err(IngestError::EmptyFile);
    }

    let mut utterances = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 4 {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!("expected 4 tab-separated columns, found {}", cells.len()),
            });
        }
        let start_s = parse_time(cells[0], line_no, "start_time")?;
        let stop_s = parse_time(cells[1], line_no, "stop_time")?;
        if stop_s < start_s {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!("stop_time {stop_s} precedes start_time {start_s}"),
            });
        }
        let tag = cells[2].trim();
        let speaker = Speaker::from_tag(tag).ok_or_else(|| IngestError::UnknownSpeaker {
            line: line_no,
            tag: tag.to_string(),
        })?;
        if let Some(prev) = utterances.last().map(|u: &Utterance| u.start_s) {
            if start_s < prev {
                return Err(IngestError::MalformedRow {
                    line: line_no,
                    reason: format!("start_time {start_s} is earlier than the previous row"),
                });
            }
        }
        utterances.push(Utterance {
            start_s,
            stop_s,
            speaker,
            text: cells[3].to_string(),
        });
    }

    if utterances.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(Transcript {
        participant_id,
        utterances,
    })
}

/// Serialize a transcript back to the tab-separated file format.
pub fn write_transcript(transcript: &Transcript) -> String {
    let mut out = String::from(TRANSCRIPT_HEADER);
    out.push('\n');
    for u in &transcript.utterances {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            u.start_s,
            u.stop_s,
            u.speaker.tag(),
            u.text
        ));
    }
    out
}

/// Join a participant's non-blank turns, each trimmed and suffixed with `./`,
/// separated by single spaces.
pub fn extract_participant_text(transcript: &Transcript) -> JointDialogue {
    let turns: Vec<String> = transcript
        .utterances
        .iter()
        .filter(|u| u.speaker == Speaker::Participant)
        .map(|u| u.text.trim())
        .filter(|t| !t.is_empty())
        .map(|t| format!("{t}{TURN_MARKER}"))
        .collect();
    JointDialogue {
        participant_id: transcript.participant_id,
        utterance_count: turns.len(),
        text: turns.join(" "),
    }
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    #[serde(rename = "Participant_ID")]
    participant_id: u32,
    #[serde(rename = "PHQ8_Binary")]
    binary: u8,
    #[serde(rename = "PHQ8_Score")]
    total: u8,
}

const ITEM_COLUMNS: [&str; PHQ8_ITEMS] = [
    "PHQ8_NoInterest",
    "PHQ8_Depressed",
    "PHQ8_Sleep",
    "PHQ8_Tired",
    "PHQ8_Appetite",
    "PHQ8_Failure",
    "PHQ8_Concentrating",
    "PHQ8_Moving",
];

/// Read a comma-separated label file with `Participant_ID`, `PHQ8_Binary`,
/// `PHQ8_Score` and, optionally, the eight item columns.
pub fn load_labels(raw: &mut dyn Read) -> Result<Vec<LabelRecord>, IngestError> {
    let text = decode(raw)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    for required in ["Participant_ID", "PHQ8_Binary", "PHQ8_Score"] {
        if !headers.iter().any(|h| h == required) {
            return Err(IngestError::MalformedRow {
                line: 1,
                reason: format!("missing column {required}"),
            });
        }
    }
    let item_idx: Option<Vec<usize>> = ITEM_COLUMNS
        .iter()
        .map(|name| headers.iter().position(|h| h == *name))
        .collect();

    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (row_idx, result) in reader.records().enumerate() {
        let line = row_idx + 2;
        let record = result?;
        let row: LabelRow = record
            .deserialize(Some(&headers))
            .map_err(|e| IngestError::MalformedRow {
                line,
                reason: e.to_string(),
            })?;
        let item_scores = match &item_idx {
            Some(idx) => Some(parse_items(&record, idx, line)?),
            None => None,
        };
        let label = LabelRecord {
            participant_id: row.participant_id,
            phq8_total: row.total,
            phq8_binary: row.binary,
            item_scores,
        };
        validate_label(&label)?;
        if !seen.insert(label.participant_id) {
            return Err(IngestError::DuplicateParticipant(label.participant_id));
        }
        records.push(label);
    }
    Ok(records)
}

fn parse_items(record: &csv::StringRecord, idx: &[usize], line: usize) -> Result<[u8; PHQ8_ITEMS], IngestError> {
    let mut items = [0u8; PHQ8_ITEMS];
    for (slot, &col) in items.iter_mut().zip(idx) {
        let cell = record.get(col).unwrap_or("");
        *slot = cell.parse().map_err(|_| IngestError::MalformedRow {
            line,
            reason: format!("item score {cell:?} is not an integer"),
        })?;
    }
    Ok(items)
}

fn validate_label(label: &LabelRecord) -> Result<(), IngestError> {
    let bad = |reason: String| IngestError::InconsistentLabel {
        participant_id: label.participant_id,
        reason,
    };
    if label.phq8_total > PHQ8_MAX_TOTAL {
        return Err(bad(format!("total {} exceeds {PHQ8_MAX_TOTAL}", label.phq8_total)));
    }
    if label.phq8_binary > 1 {
        return Err(bad(format!("binary value {} is not 0 or 1", label.phq8_binary)));
    }
    let expected = u8::from(label.phq8_total >= PHQ8_POSITIVE_CUTOFF);
    if label.phq8_binary != expected {
        return Err(bad(format!(
            "binary {} disagrees with total {}",
            label.phq8_binary, label.phq8_total
        )));
    }
    if let Some(items) = &label.item_scores {
        if let Some(item) = items.iter().find(|&&s| s > PHQ8_ITEM_MAX) {
            return Err(bad(format!("item score {item} out of 0..=3")));
        }
        let sum: u32 = items.iter().map(|&s| u32::from(s)).sum();
        if sum != u32::from(label.phq8_total) {
            return Err(bad(format!("item scores sum to {sum}, total is {}", label.phq8_total)));
        }
    }
    Ok(())
}

/// Count positives and negatives, optionally restricted to one split.
pub fn summarize_cohort(labels: &[LabelRecord], split: Option<&DatasetSplit>) -> Result<CohortSummary, IngestError> {
    let selected: Vec<&LabelRecord> = match split {
        None => labels.iter().collect(),
        Some(split) => {
            let by_id: BTreeMap<u32, &LabelRecord> = labels.iter().map(|l| (l.participant_id, l)).collect();
            split
                .participant_ids
                .iter()
                .map(|id| by_id.get(id).copied().ok_or(IngestError::MissingLabel(*id)))
                .collect::<Result<_, _>>()?
        }
    };
    let n_positive = selected.iter().filter(|l| l.phq8_total >= PHQ8_POSITIVE_CUTOFF).count();
    let n_negative = selected.len() - n_positive;
    let ratio = (n_negative > 0).then(|| round_to(n_positive as f64 / n_negative as f64, 2));
    Ok(CohortSummary {
        n_total: selected.len(),
        n_positive,
        n_negative,
        ratio,
    })
}

fn round_to(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (value * scale).round() / scale
}

/// Parse a split file: one participant id per line, blank lines ignored.
pub fn parse_split(name: SplitName, raw: &str) -> Result<DatasetSplit, IngestError> {
    let mut participant_ids = BTreeSet::new();
    for (idx, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id: u32 = line.parse().map_err(|_| IngestError::MalformedRow {
            line: idx + 1,
            reason: format!("{line:?} is not a participant id"),
        })?;
        if !participant_ids.insert(id) {
            return Err(IngestError::DuplicateParticipant(id));
        }
    }
    Ok(DatasetSplit { name, participant_ids })
}

/// Reject any participant listed in more than one split.
pub fn validate_splits(splits: &[DatasetSplit]) -> Result<(), IngestError> {
    let mut owner: BTreeMap<u32, SplitName> = BTreeMap::new();
    for split in splits {
        for &id in &split.participant_ids {
            if let Some(&first) = owner.get(&id) {
                return Err(IngestError::OverlappingSplits {
                    participant_id: id,
                    first,
                    second: split.name,
                });
            }
            owner.insert(id, split.name);
        }
    }
    Ok(())
}

/// Extract the participant id from a `<id>_TRANSCRIPT[.ext]` file name.
pub fn participant_id_from_file_name(name: &str) -> Option<u32> {
    let (id, rest) = name.split_once('_')?;
    if !rest.starts_with("TRANSCRIPT") {
        return None;
    }
    id.parse().ok()
}

/// Load every `<id>_TRANSCRIPT*` file in a directory, ordered by id.
pub fn load_transcript_dir(dir: &Path) -> Result<Vec<Transcript>, IngestError> {
    let entries = std::fs::read_dir(dir).map_err(|e| IngestError::io(dir, e))?;
    let mut found = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| IngestError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = participant_id_from_file_name(&name) {
            if found.insert(id, entry.path()).is_some() {
                return Err(IngestError::DuplicateParticipant(id));
            }
        }
    }
    found
        .into_iter()
        .map(|(id, path)| {
            let mut file = std::fs::File::open(&path).map_err(|e| IngestError::io(&path, e))?;
            parse_transcript(&mut file, id).map_err(|e| match e {
                IngestError::MalformedRow { line, reason } => IngestError::MalformedRow {
                    line,
                    reason: format!("{}: {reason}", path.display()),
                },
                other => other,
            })
        })
        .collect()
}

/// Write `(participant_id, text)` rows with a header.
pub fn write_dialogues_csv(dialogues: &[JointDialogue], out: &mut dyn std::io::Write) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["participant_id", "text"])?;
    for d in dialogues {
        writer.write_record([d.participant_id.to_string(), d.text.clone()])?;
    }
    writer
        .flush()
        .map_err(|e| IngestError::io(Path::new("<dialogues>"), e))?;
    Ok(())
}

pub fn read_dialogues_csv(raw: &mut dyn Read) -> Result<Vec<JointDialogue>, IngestError> {
    let text = decode(raw)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(IngestError::MalformedRow {
                line: row_idx + 2,
                reason: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let participant_id: u32 = record[0].trim().parse().map_err(|_| IngestError::MalformedRow {
            line: row_idx + 2,
            reason: format!("{:?} is not a participant id", &record[0]),
        })?;
        if !seen.insert(participant_id) {
            return Err(IngestError::DuplicateParticipant(participant_id));
        }
        let text = record[1].to_string();
        let utterance_count = text.matches(TURN_MARKER).count();
        out.push(JointDialogue {
            participant_id,
            text,
            utterance_count,
        });
    }
    Ok(out)
}

/// Bin per-dialogue token counts into `[start, start + width)` buckets
/// covering `0..=max_count`. Empty buckets are kept so the output is a
/// contiguous histogram.
pub fn token_histogram(
    dialogues: &[JointDialogue],
    bin_width: usize,
    tokenizer: &dyn TokenCounter,
) -> Vec<(usize, usize)> {
    assert!(bin_width > 0, "bin_width must be positive");
    let counts: Vec<usize> = dialogues.iter().map(|d| tokenizer.count(&d.text)).collect();
    let Some(&max) = counts.iter().max() else {
        return Vec::new();
    };
    let mut bins = vec![0usize; max / bin_width + 1];
    for c in counts {
        bins[c / bin_width] += 1;
    }
    bins.into_iter().enumerate().map(|(i, n)| (i * bin_width, n)).collect()
}
