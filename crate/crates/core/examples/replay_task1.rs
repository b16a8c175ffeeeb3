//! Task 1 over the shipped cassette: likelihood ratings, a threshold sweep
//! and the classification report at threshold 5.
//!
//! ```text
//! cargo run --example replay_task1
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use psyscreen::backend::{build_backend, BackendSpec};
use psyscreen::knowledge::{load_config, KnowledgeKind};
use psyscreen::orchestrator::{Orchestrator, RunOptions};
use psyscreen::prompt::{PromptAssembler, PromptBundle};
use psyscreen::report::{calibrate, calibration_table, evaluate_task1};
use psyscreen::transcript::{extract_participant_text, load_labels, load_transcript_dir};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let test_ids = [300, 306, 308, 309, 311];
    let dialogues: Vec<_> = load_transcript_dir(&fixtures.join("dataset/transcripts"))?
        .iter()
        .map(extract_participant_text)
        .filter(|d| test_ids.contains(&d.participant_id))
        .collect();
    let labels = load_labels(&mut File::open(fixtures.join("dataset/labels.csv"))?)?;

    let k = fixtures.join("knowledge");
    let docs: BTreeMap<KnowledgeKind, _> = [
        (KnowledgeKind::Phq8Criteria, k.join("phq8_criteria.md")),
        (KnowledgeKind::Dsm5Criteria, k.join("dsm5_criteria.md")),
        (KnowledgeKind::DataDescription, k.join("data_description.md")),
        (KnowledgeKind::TrainingExamples, k.join("training_examples.jsonl")),
    ]
    .into();
    let cfg = load_config("enhanced", &docs)?;
    let bundle = PromptBundle::default();

    let spec = BackendSpec::load(&fixtures.join("backends/replay_task1.toml"))?;
    let backend = build_backend(&spec, None)?;
    let options = RunOptions {
        run_id: "replay-task1".into(),
        batch_size: 5,
        ..RunOptions::default()
    };
    let run = Orchestrator::new(&*backend, &spec, PromptAssembler::new(&cfg, &bundle))
        .with_options(options)
        .run_task1(&dialogues)?;

    for a in &run.assessments {
        println!("{}: {:?}/7", a.participant_id, a.likelihood);
    }
    let sweep = calibrate(&run.manifest.run_id, &run.assessments, &labels, &[3, 4, 5, 6, 7])?;
    print!("\n{}", calibration_table(&sweep));
    let eval = evaluate_task1(&run.assessments, &labels, 5)?;
    println!("\n{}", serde_json::to_string_pretty(&eval)?);
    Ok(())
}
