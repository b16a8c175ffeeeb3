//! Run the reply parsers over the verbatim fixtures and a few messy variants.
//!
//! ```text
//! cargo run --example parse_replies
//! ```

use std::path::Path;

use psyscreen::parser::{parse_item_breakdown, parse_likelihood, parse_phq8_total, parse_verdict, ParseRuleSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let replies = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replies");
    let read = |name: &str| std::fs::read_to_string(replies.join(name));

    let table = read("table_iv.txt")?;
    for (id, outcome) in parse_likelihood(&table, &[300, 306, 308, 309, 311]) {
        println!("participant {id}: {:?} via {:?}", outcome.value, outcome.matched_rule);
    }

    let stage1 = parse_phq8_total(&read("stage1.txt")?);
    println!("stage 1: {:?}", stage1.value);
    let stage2 = parse_item_breakdown(&read("stage2.txt")?);
    println!("stage 2 items: {:?} via {:?}", stage2.value, stage2.matched_rule);
    let stage3 = parse_verdict(&read("stage3.txt")?);
    println!("stage 3: {:?}", stage3.value);

    // Replies that stray from the requested format.
    let messy = [
        "**Participant 12:** ... Likelihood of Ongoing Mental Health Disorder: **4 / 7**",
        "Participant 12 - I'd put the likelihood at five out of 7.",
        "Participant 12: Likelihood: 9/7",
    ];
    let lenient = ParseRuleSet::v1().with_word_numbers();
    for reply in messy {
        let strict = &parse_likelihood(reply, &[12])[&12];
        let loose = &lenient.parse_likelihood(reply, &[12])[&12];
        println!(
            "{reply:?}\n  v1 {:?} {:?}\n  +words {:?}",
            strict.value, strict.diagnostics, loose.value
        );
    }
    Ok(())
}
