//! Background-knowledge configurations.
//!
//! A configuration is a named set of knowledge documents attached to every
//! prompt. Five presets cover the settings evaluated: no background, PHQ-8
//! criteria, DSM-5 criteria, both, and an enhanced set that adds a dataset
//! description and few-shot training exemplars.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset {0:?} (expected one of no-background, phq8, dsm5, dsm5-phq8, enhanced)")]
    UnknownPreset(String),
    #[error("preset {preset} requires a {kind} document")]
    MissingDocument { preset: Preset, kind: KnowledgeKind },
    #[error("{path}: {reason}")]
    UnreadableDocument { path: String, reason: String },
    #[error("{kind} document at {path} is empty")]
    EmptyDocument { kind: KnowledgeKind, path: String },
    #[error("unknown document kind {0:?}")]
    UnknownKind(String),
}

/// Document kinds, in the order they are rendered into prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnowledgeKind {
    Phq8Criteria,
    Dsm5Criteria,
    DataDescription,
    TrainingExamples,
}

impl KnowledgeKind {
    pub const ALL: [KnowledgeKind; 4] = [
        KnowledgeKind::Phq8Criteria,
        KnowledgeKind::Dsm5Criteria,
        KnowledgeKind::DataDescription,
        KnowledgeKind::TrainingExamples,
    ];

    pub fn key(self) -> &'static str {
        match self {
            KnowledgeKind::Phq8Criteria => "phq8",
            KnowledgeKind::Dsm5Criteria => "dsm5",
            KnowledgeKind::DataDescription => "data-description",
            KnowledgeKind::TrainingExamples => "training-examples",
        }
    }

    pub fn default_title(self) -> &'static str {
        match self {
            KnowledgeKind::Phq8Criteria => "PHQ-8 Scoring Criteria",
            KnowledgeKind::Dsm5Criteria => "DSM-5 Diagnostic Criteria",
            KnowledgeKind::DataDescription => "Dataset Description",
            KnowledgeKind::TrainingExamples => "Labelled Training Examples",
        }
    }
}

impl fmt::Display for KnowledgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl std::str::FromStr for KnowledgeKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KnowledgeKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or_else(|| ConfigError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    NoBackground,
    Phq8,
    Dsm5,
    Dsm5Phq8,
    Enhanced,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::NoBackground,
        Preset::Phq8,
        Preset::Dsm5,
        Preset::Dsm5Phq8,
        Preset::Enhanced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::NoBackground => "no-background",
            Preset::Phq8 => "phq8",
            Preset::Dsm5 => "dsm5",
            Preset::Dsm5Phq8 => "dsm5-phq8",
            Preset::Enhanced => "enhanced",
        }
    }

    /// Document kinds attached by this preset.
    pub fn kinds(self) -> &'static [KnowledgeKind] {
        use KnowledgeKind::*;
        match self {
            Preset::NoBackground => &[],
            Preset::Phq8 => &[Phq8Criteria],
            Preset::Dsm5 => &[Dsm5Criteria],
            Preset::Dsm5Phq8 => &[Phq8Criteria, Dsm5Criteria],
            Preset::Enhanced => &[Phq8Criteria, Dsm5Criteria, DataDescription, TrainingExamples],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ConfigError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeDoc {
    pub kind: KnowledgeKind,
    pub title: String,
    pub body: String,
    pub source_path: String,
}

impl KnowledgeDoc {
    pub fn new(
        kind: KnowledgeKind,
        body: impl Into<String>,
        source_path: impl Into<String>,
    ) -> Result<Self, ConfigError> {
        let body = body.into();
        let source_path = source_path.into();
        if body.trim().is_empty() {
            return Err(ConfigError::EmptyDocument {
                kind,
                path: source_path,
            });
        }
        Ok(KnowledgeDoc {
            kind,
            title: kind.default_title().to_string(),
            body,
            source_path,
        })
    }

    /// Read a document from disk. Training-example files ending in `.jsonl`
    /// are rendered into few-shot blocks; everything else is used verbatim.
    pub fn load(kind: KnowledgeKind, path: &Path) -> Result<Self, ConfigError> {
        let unreadable = |reason: String| ConfigError::UnreadableDocument {
            path: path.display().to_string(),
            reason,
        };
        let raw = std::fs::read_to_string(path).map_err(|e| unreadable(e.to_string()))?;
        let body = if kind == KnowledgeKind::TrainingExamples && path.extension().is_some_and(|ext| ext == "jsonl") {
            render_training_examples(&raw).map_err(unreadable)?
        } else {
            raw
        };
        KnowledgeDoc::new(kind, body, path.display().to_string())
    }
}

/// One labelled exemplar in a training-examples file.
#[derive(Debug, Clone, Deserialize)]
pub struct TrainingExample {
    pub excerpt: String,
    pub label: String,
}

/// Render JSON-lines `{"excerpt", "label"}` records as numbered few-shot blocks.
pub fn render_training_examples(jsonl: &str) -> Result<String, String> {
    let mut blocks = Vec::new();
    for (idx, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ex: TrainingExample = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", idx + 1))?;
        blocks.push(format!(
            "Example {}:\nDialogue: {}\nAssessment: {}",
            blocks.len() + 1,
            ex.excerpt.trim(),
            ex.label.trim()
        ));
    }
    Ok(blocks.join("\n\n"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackgroundConfig {
    pub name: String,
    docs: BTreeMap<KnowledgeKind, KnowledgeDoc>,
}

impl BackgroundConfig {
    pub fn empty(name: impl Into<String>) -> Self {
        BackgroundConfig {
            name: name.into(),
            docs: BTreeMap::new(),
        }
    }

    /// Build a preset from in-memory documents. Documents of kinds the preset
    /// does not use are ignored.
    pub fn from_docs(preset: Preset, docs: impl IntoIterator<Item = KnowledgeDoc>) -> Result<Self, ConfigError> {
        let mut by_kind: BTreeMap<KnowledgeKind, KnowledgeDoc> = docs.into_iter().map(|d| (d.kind, d)).collect();
        let mut cfg = BackgroundConfig::empty(preset.name());
        for &kind in preset.kinds() {
            let doc = by_kind
                .remove(&kind)
                .ok_or(ConfigError::MissingDocument { preset, kind })?;
            cfg.docs.insert(kind, doc);
        }
        Ok(cfg)
    }

    /// Documents in rendering order.
    pub fn docs(&self) -> impl Iterator<Item = &KnowledgeDoc> {
        self.docs.values()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn has(&self, kind: KnowledgeKind) -> bool {
        self.docs.contains_key(&kind)
    }
}

/// Resolve a preset by name and load the documents it needs from disk.
pub fn load_config(
    preset_name: &str,
    doc_paths: &BTreeMap<KnowledgeKind, PathBuf>,
) -> Result<BackgroundConfig, ConfigError> {
    let preset: Preset = preset_name.parse()?;
    let docs = preset
        .kinds()
        .iter()
        .map(|&kind| {
            let path = doc_paths
                .get(&kind)
                .ok_or(ConfigError::MissingDocument { preset, kind })?;
            KnowledgeDoc::load(kind, path)
        })
        .collect::<Result<Vec<_>, _>>()?;
    BackgroundConfig::from_docs(preset, docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(kind: KnowledgeKind) -> KnowledgeDoc {
        KnowledgeDoc::new(kind, format!("body of {kind}"), format!("{kind}.md")).unwrap()
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!(matches!("gpt".parse::<Preset>(), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn load_presets_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = BTreeMap::new();
        for kind in KnowledgeKind::ALL {
            let p = dir.path().join(format!("{kind}.txt"));
            std::fs::write(&p, format!("criteria for {kind}")).unwrap();
            paths.insert(kind, p);
        }

        let none = load_config("no-background", &BTreeMap::new()).unwrap();
        assert_eq!(none.len(), 0);

        let enhanced = load_config("enhanced", &paths).unwrap();
        assert_eq!(enhanced.len(), 4);

        let mut partial = paths.clone();
        partial.remove(&KnowledgeKind::Phq8Criteria);
        assert!(matches!(
            load_config("dsm5-phq8", &partial),
            Err(ConfigError::MissingDocument {
                kind: KnowledgeKind::Phq8Criteria,
                ..
            })
        ));
        assert!(matches!(
            load_config("everything", &paths),
            Err(ConfigError::UnknownPreset(_))
        ));
    }

    #[test]
    fn empty_and_missing_documents() {
        assert!(matches!(
            KnowledgeDoc::new(KnowledgeKind::Dsm5Criteria, "  \n", "x"),
            Err(ConfigError::EmptyDocument { .. })
        ));
        assert!(matches!(
            KnowledgeDoc::load(KnowledgeKind::Dsm5Criteria, Path::new("/nonexistent/dsm5.md")),
            Err(ConfigError::UnreadableDocument { .. })
        ));
    }

    #[test]
    fn training_examples_render_as_blocks() {
        let jsonl = "{\"excerpt\": \"i can't sleep./\", \"label\": \"PHQ-8 14\"}\n\n{\"excerpt\": \"good./\", \"label\": \"PHQ-8 2\"}\n";
        let body = render_training_examples(jsonl).unwrap();
        assert_eq!(
            body,
            "Example 1:\nDialogue: i can't sleep./\nAssessment: PHQ-8 14\n\nExample 2:\nDialogue: good./\nAssessment: PHQ-8 2"
        );
        assert!(render_training_examples("not json").is_err());
    }

    proptest! {
        #[test]
        fn presets_attach_exactly_their_kinds(
            idx in 0usize..5,
            extra in proptest::collection::vec(0usize..4, 0..4),
        ) {
            let preset = Preset::ALL[idx];
            let mut docs: Vec<KnowledgeDoc> = KnowledgeKind::ALL.iter().map(|&k| doc(k)).collect();
            docs.extend(extra.iter().map(|&i| doc(KnowledgeKind::ALL[i])));
            let cfg = BackgroundConfig::from_docs(preset, docs).unwrap();
            let kinds: Vec<KnowledgeKind> = cfg.docs().map(|d| d.kind).collect();
            let mut expected = preset.kinds().to_vec();
            expected.sort();
            prop_assert_eq!(kinds, expected);
            prop_assert_eq!(cfg.name.as_str(), preset.name());
        }
    }
}
