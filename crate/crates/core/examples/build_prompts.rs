//! Show how each knowledge preset changes the assembled prompts.
//!
//! ```text
//! cargo run --example build_prompts [PRESET]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use psyscreen::knowledge::{load_config, KnowledgeKind, Preset};
use psyscreen::prompt::{PromptAssembler, PromptBundle};
use psyscreen::tokens::{count_tokens, TokenizerSpec};
use psyscreen::transcript::JointDialogue;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/knowledge");
    let docs: BTreeMap<KnowledgeKind, _> = [
        (KnowledgeKind::Phq8Criteria, fixtures.join("phq8_criteria.md")),
        (KnowledgeKind::Dsm5Criteria, fixtures.join("dsm5_criteria.md")),
        (KnowledgeKind::DataDescription, fixtures.join("data_description.md")),
        (
            KnowledgeKind::TrainingExamples,
            fixtures.join("training_examples.jsonl"),
        ),
    ]
    .into();
    let dialogue = JointDialogue {
        participant_id: 300,
        text: "good./ atlanta georgia./ um my parents are from here um./ i love it./".into(),
        utterance_count: 4,
    };
    let bundle = PromptBundle::default();

    let chosen = std::env::args().nth(1);
    for preset in Preset::ALL {
        if chosen.as_deref().is_some_and(|c| c != preset.name()) {
            continue;
        }
        let cfg = load_config(preset.name(), &docs)?;
        let assembler = PromptAssembler::new(&cfg, &bundle);
        let prompt = assembler.task1(&[&dialogue])?;
        let tokens = count_tokens(&prompt.text(), TokenizerSpec::WordApprox);
        println!("== {preset}: {} documents, ~{tokens} tokens", cfg.len());
        if chosen.is_some() {
            println!("--- system\n{}\n--- user\n{}", prompt.system, prompt.user);
            println!("--- stage 2\n{}", assembler.stage2());
            println!("--- stage 3\n{}", assembler.stage3(5)?);
        }
    }
    Ok(())
}
