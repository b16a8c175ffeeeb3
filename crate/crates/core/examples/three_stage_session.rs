//! One three-stage PHQ-8 conversation against a scripted model, printing
//! the parsed result of each stage.
//!
//! ```text
//! cargo run --example three_stage_session
//! ```

use std::path::Path;
use std::time::Duration;

use psyscreen::backend::{BackendKind, BackendSpec, ScriptRule, ScriptStep, ScriptedBackend};
use psyscreen::knowledge::BackgroundConfig;
use psyscreen::orchestrator::{MemorySink, Orchestrator};
use psyscreen::prompt::{PromptAssembler, PromptBundle};
use psyscreen::transcript::JointDialogue;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let replies = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replies");
    let rule = |needle: &str, file: &str| -> std::io::Result<ScriptRule> {
        Ok(ScriptRule {
            needle: needle.into(),
            step: ScriptStep::reply(std::fs::read_to_string(replies.join(file))?),
        })
    };
    let backend = ScriptedBackend::rules(
        Duration::from_secs(5),
        vec![
            rule("Estimated PHQ-8 Score: a+b", "stage1.txt")?,
            rule("Break down how you derived", "stage2.txt")?,
            rule("Another evaluator assigned", "stage3.txt")?,
        ],
        None,
    );
    let spec = BackendSpec::new(BackendKind::Scripted);
    let cfg = BackgroundConfig::empty("no-background");
    let bundle = PromptBundle::default();
    let sink = MemorySink::default();
    let orchestrator = Orchestrator::new(&backend, &spec, PromptAssembler::new(&cfg, &bundle)).with_sink(&sink);

    let dialogue = JointDialogue {
        participant_id: 306,
        text: "i'm fine a little tired./ i had a legal issue a while back./".into(),
        utterance_count: 2,
    };
    let session = orchestrator.run_task2(&dialogue, 5)?;
    println!(
        "stage 1 total: {:?} addends {:?}",
        session.stage1.total, session.stage1.addends
    );
    println!(
        "stage 2 items: {:?} total {:?}",
        session.stage2.item_scores, session.stage2.total
    );
    println!(
        "stage 3: {:?}, revised {:?} (other evaluator said {})",
        session.stage3.verdict, session.stage3.revised_total, session.stage3.external_score
    );
    println!(
        "{} messages exchanged, {} raw replies kept",
        session.transcript_of_messages.len(),
        sink.len()
    );
    Ok(())
}
