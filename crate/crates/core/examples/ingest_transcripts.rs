//! Turn the synthetic transcripts into joint dialogues and print the cohort
//! table.
//!
//! ```text
//! cargo run --example ingest_transcripts
//! ```

use std::fs::File;
use std::path::Path;

use psyscreen::report::cohort_table;
use psyscreen::transcript::{
    extract_participant_text, load_labels, load_transcript_dir, parse_split, summarize_cohort, SplitName,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/dataset");
    let transcripts = load_transcript_dir(&data.join("transcripts"))?;
    let labels = load_labels(&mut File::open(data.join("labels.csv"))?)?;

    for t in &transcripts {
        let d = extract_participant_text(t);
        let preview: String = d.text.chars().take(60).collect();
        println!("{} ({} turns): {preview}...", d.participant_id, d.utterance_count);
    }

    let mut splits = Vec::new();
    for name in [SplitName::Train, SplitName::Test] {
        let text = std::fs::read_to_string(data.join(format!("{name}_split.txt")))?;
        let split = parse_split(name, &text)?;
        splits.push((name, summarize_cohort(&labels, Some(&split))?));
    }
    println!();
    print!("{}", cohort_table(&summarize_cohort(&labels, None)?, &splits));
    Ok(())
}
