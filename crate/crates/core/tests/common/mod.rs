#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Run the CLI in-process with the fixture config.
pub fn cli(args: &[&str]) -> Output {
    let config = fixtures().join("run.toml");
    let mut full = vec!["psyscreen".to_string(), "--config".into(), config.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    cli_raw(full)
}

pub fn cli_raw(args: Vec<String>) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = psyscreen::cli::main_with_args(args, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn path(p: &Path) -> String {
    p.display().to_string()
}

/// Task 1 over the replay cassette into `<out>/<run_id>`.
pub fn replay_task1(out: &Path, run_id: &str) -> Output {
    let backend = fixtures().join("backends/replay_task1.toml");
    cli(&[
        "assess",
        "--task",
        "1",
        "--backend",
        &path(&backend),
        "--batch-size",
        "5",
        "--out-dir",
        &path(out),
        "--run-id",
        run_id,
    ])
}

pub fn replay_task2(out: &Path, run_id: &str) -> Output {
    let backend = fixtures().join("backends/replay_task2.toml");
    cli(&[
        "assess",
        "--task",
        "2",
        "--backend",
        &path(&backend),
        "--out-dir",
        &path(out),
        "--run-id",
        run_id,
    ])
}

pub fn labels() -> String {
    path(&fixtures().join("dataset/labels.csv"))
}
