//! Regenerate the shipped replay cassettes from the scripted backend.
//!
//! ```text
//! cargo run --example record_fixture_cassettes [OUT_DIR]
//! ```
//!
//! Writes `task1_enhanced.jsonl` and `task2_enhanced.jsonl` into OUT_DIR
//! (default `fixtures/cassettes`). People with access to the real interview
//! corpus can record against a live model the same way by passing
//! `--backend fixtures/backends/openai.toml` to `psyscreen assess --record`.

use std::path::{Path, PathBuf};

use psyscreen::cli::main_with_args;

fn record(fixtures: &Path, out: &Path, task: u8, batch_size: usize) {
    let cassette = out.join(format!("task{task}_enhanced.jsonl"));
    // Start from an empty tape so the output depends only on the script.
    let _ = std::fs::remove_file(&cassette);
    let runs = std::env::temp_dir().join("psyscreen-record");
    let config = fixtures.join("run.toml");
    let backend = fixtures.join("backends/scripted.toml");
    let args: Vec<String> = vec![
        "psyscreen".into(),
        "--config".into(),
        config.display().to_string(),
        "assess".into(),
        "--task".into(),
        task.to_string(),
        "--backend".into(),
        backend.display().to_string(),
        "--batch-size".into(),
        batch_size.to_string(),
        "--cassette".into(),
        cassette.display().to_string(),
        "--record".into(),
        "--out-dir".into(),
        runs.display().to_string(),
        "--run-id".into(),
        format!("record-task{task}"),
    ];
    let code = main_with_args(args, &mut std::io::stdout(), &mut std::io::stderr());
    assert_eq!(code, 0, "recording task {task} failed");
    println!("wrote {}", cassette.display());
}

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| fixtures.join("cassettes"));
    record(&fixtures, &out, 1, 5);
    record(&fixtures, &out, 2, 1);
}
