//! Run configuration file (TOML). Every field is optional so a file can
//! hold just the settings shared across commands; command-line flags take
//! precedence. Relative paths are resolved against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::knowledge::{KnowledgeKind, Preset};
use crate::transcript::SplitName;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub transcripts_dir: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Joint-dialogue CSV written by `ingest` and read by `assess`.
    pub dialogues: Option<PathBuf>,
    /// Split files by name (`train`, `dev`, `test`).
    #[serde(default)]
    pub splits: BTreeMap<String, PathBuf>,
    /// Which split `assess` runs on; all dialogues when unset.
    pub split: Option<String>,
    pub preset: Option<String>,
    /// Knowledge documents by kind key (`phq8`, `dsm5`, ...).
    #[serde(default)]
    pub docs: BTreeMap<String, PathBuf>,
    pub templates: Option<PathBuf>,
    pub backend: Option<PathBuf>,
    pub cassette: Option<PathBuf>,
    pub batch_size: Option<usize>,
    pub repair_retries: Option<u32>,
    pub thresholds: Option<Vec<u8>>,
    pub threshold: Option<u8>,
    pub out_dir: Option<PathBuf>,
    pub run_id: Option<String>,
    pub tokenizer: Option<String>,
    pub bin_width: Option<usize>,
    /// Seed for fixture generators; the pipeline itself draws no random numbers.
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml_str(&text, base).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.transcripts_dir,
            &mut self.labels,
            &mut self.dialogues,
            &mut self.templates,
            &mut self.backend,
            &mut self.cassette,
            &mut self.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.splits.values_mut().for_each(fix);
        self.docs.values_mut().for_each(fix);
    }

    /// Check names and that every referenced input path exists. The output
    /// directory and cassette may be created later and are not checked.
    pub fn validate(&self) -> Result<(), String> {
        if let Some(p) = &self.preset {
            p.parse::<Preset>().map_err(|e| e.to_string())?;
        }
        if let Some(s) = &self.split {
            s.parse::<SplitName>()?;
        }
        for name in self.splits.keys() {
            name.parse::<SplitName>()?;
        }
        for key in self.docs.keys() {
            key.parse::<KnowledgeKind>().map_err(|e| e.to_string())?;
        }
        if let Some(t) = self.threshold {
            if !crate::metrics::THRESHOLDS.contains(&t) {
                return Err(format!("threshold {t} outside 3..=7"));
            }
        }
        if self.batch_size == Some(0) {
            return Err("batch_size must be at least 1".into());
        }
        let inputs = [
            &self.transcripts_dir,
            &self.labels,
            &self.dialogues,
            &self.templates,
            &self.backend,
        ]
        .into_iter()
        .flatten()
        .chain(self.splits.values())
        .chain(self.docs.values());
        for p in inputs {
            if !p.exists() {
                return Err(format!("{} does not exist", p.display()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_resolve_against_the_file() {
        let cfg = RunConfig::from_toml_str(
            "labels = \"labels.csv\"\npreset = \"phq8\"\n[docs]\nphq8 = \"/abs/phq8.md\"\n[splits]\ntest = \"test.txt\"\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(cfg.labels.as_deref(), Some(Path::new("/data/labels.csv")));
        assert_eq!(cfg.docs["phq8"], PathBuf::from("/abs/phq8.md"));
        assert_eq!(cfg.splits["test"], PathBuf::from("/data/test.txt"));
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("labels.csv"), "x").unwrap();
        let ok = RunConfig::from_toml_str("labels = \"labels.csv\"\npreset = \"enhanced\"\n", dir.path()).unwrap();
        ok.validate().unwrap();

        let missing = RunConfig::from_toml_str("labels = \"nope.csv\"\n", dir.path()).unwrap();
        assert!(missing.validate().unwrap_err().contains("nope.csv"));
        let preset = RunConfig::from_toml_str("preset = \"gpt5\"\n", dir.path()).unwrap();
        assert!(preset.validate().is_err());
        assert!(RunConfig::from_toml_str("unknown_key = 1\n", dir.path()).is_err());
        let threshold = RunConfig::from_toml_str("threshold = 9\n", dir.path()).unwrap();
        assert!(threshold.validate().is_err());
    }
}
