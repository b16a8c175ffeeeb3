//! On-disk layout of a run:
//!
//! ```text
//! <out_dir>/<run_id>/manifest.json
//! <out_dir>/<run_id>/raw/<participant_id>_<stage>.txt
//! <out_dir>/<run_id>/sessions.jsonl
//! ```
//!
//! Raw replies are written as they arrive, before parsing, so a run can be
//! re-parsed without querying the model again.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::orchestrator::{RawReplySink, RunManifest, Task1Assessment, Task2Session};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{0} is not a run directory (no manifest.json)")]
    NotARun(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sessions {
    Task1(Vec<Task1Assessment>),
    Task2(Vec<Task2Session>),
}

impl Sessions {
    pub fn len(&self) -> usize {
        match self {
            Sessions::Task1(v) => v.len(),
            Sessions::Task2(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Create (or reset) `<out_dir>/<run_id>`. Stale raw replies from an
    /// earlier run with the same id are removed.
    pub fn create(out_dir: &Path, run_id: &str) -> Result<Self, RunError> {
        if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id == "." || run_id == ".." {
            return Err(RunError::Format {
                path: out_dir.to_path_buf(),
                reason: format!("invalid run id {run_id:?}"),
            });
        }
        let root = out_dir.join(run_id);
        let raw = root.join("raw");
        if raw.exists() {
            fs::remove_dir_all(&raw).map_err(io_err(&raw))?;
        }
        fs::create_dir_all(&raw).map_err(io_err(&raw))?;
        Ok(RunDir { root })
    }

    pub fn open(root: &Path) -> Result<Self, RunError> {
        if !root.join("manifest.json").is_file() {
            return Err(RunError::NotARun(root.to_path_buf()));
        }
        Ok(RunDir {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn sessions_path(&self) -> PathBuf {
        self.root.join("sessions.jsonl")
    }

    pub fn raw_path(&self, participant_id: u32, stage: &str) -> PathBuf {
        self.root.join("raw").join(format!("{participant_id}_{stage}.txt"))
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), RunError> {
        let path = self.manifest_path();
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    }

    pub fn read_manifest(&self) -> Result<RunManifest, RunError> {
        let path = self.manifest_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| RunError::Format {
            path,
            reason: e.to_string(),
        })
    }

    fn write_lines<T: serde::Serialize>(&self, items: &[T]) -> Result<(), RunError> {
        let path = self.sessions_path();
        let mut file = fs::File::create(&path).map_err(io_err(&path))?;
        for item in items {
            let line = serde_json::to_string(item).expect("session serializes");
            writeln!(file, "{line}").map_err(io_err(&path))?;
        }
        Ok(())
    }

    pub fn write_task1(&self, assessments: &[Task1Assessment]) -> Result<(), RunError> {
        self.write_lines(assessments)
    }

    pub fn write_task2(&self, sessions: &[Task2Session]) -> Result<(), RunError> {
        self.write_lines(sessions)
    }

    /// Sessions of the task recorded in the manifest.
    pub fn read_sessions(&self) -> Result<Sessions, RunError> {
        let task = self.read_manifest()?.task;
        let path = self.sessions_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |idx: usize, e: serde_json::Error| RunError::Format {
            path: path.clone(),
            reason: format!("line {}: {e}", idx + 1),
        };
        match task {
            1 => lines
                .enumerate()
                .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(i, e)))
                .collect::<Result<_, _>>()
                .map(Sessions::Task1),
            2 => lines
                .enumerate()
                .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(i, e)))
                .collect::<Result<_, _>>()
                .map(Sessions::Task2),
            other => Err(RunError::Format {
                path: self.manifest_path(),
                reason: format!("unknown task {other}"),
            }),
        }
    }
}

impl RawReplySink for RunDir {
    fn write_raw(&self, participant_id: u32, stage: &str, content: &str) -> std::io::Result<()> {
        fs::write(self.raw_path(participant_id, stage), content)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::LatencySummary;
    use crate::orchestrator::ParseInfo;

    fn manifest(task: u8) -> RunManifest {
        RunManifest {
            run_id: "r1".into(),
            task,
            config_name: "phq8".into(),
            model_id: "gpt-4".into(),
            batch_size: 1,
            repair_retries: 1,
            ruleset_version: "ruleset-v1".into(),
            started_at: 0,
            finished_at: 0,
            cassette: None,
            n_participants: 1,
            n_na: 0,
            n_na_by_stage: None,
            latency: LatencySummary {
                mean_s: 0.0,
                p50_s: 0.0,
                max_s: 0.0,
                n_success: 1,
                n_timeout: 0,
            },
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::create(dir.path(), "r1").unwrap();
        run.write_raw(300, "task1", "reply").unwrap();
        assert_eq!(
            fs::read_to_string(run.root().join("raw/300_task1.txt")).unwrap(),
            "reply"
        );
        run.write_manifest(&manifest(1)).unwrap();
        let a = Task1Assessment {
            participant_id: 300,
            likelihood: Some(2),
            rationale: "r".into(),
            raw_reply: "reply".into(),
            parse: ParseInfo::default(),
        };
        run.write_task1(std::slice::from_ref(&a)).unwrap();
        let reopened = RunDir::open(run.root()).unwrap();
        assert_eq!(reopened.read_manifest().unwrap(), manifest(1));
        assert_eq!(reopened.read_sessions().unwrap(), Sessions::Task1(vec![a]));

        let again = RunDir::create(dir.path(), "r1").unwrap();
        assert!(!again.raw_path(300, "task1").exists());
    }

    #[test]
    fn rejects_bad_ids_and_missing_runs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(RunDir::create(dir.path(), "../x").is_err());
        assert!(matches!(RunDir::open(dir.path()), Err(RunError::NotARun(_))));
    }
}
