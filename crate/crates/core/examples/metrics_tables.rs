//! Classification and regression metrics from confusion matrices and score
//! lists, laid out like a comparison table.
//!
//! ```text
//! cargo run --example metrics_tables
//! ```

use std::collections::BTreeMap;

use psyscreen::metrics::{classification_report, regression_report, ConfusionMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // (tp, fp, fn, tn) for a few hypothetical configurations.
    let rows = [
        ("strong", ConfusionMatrix::new(52, 5, 3, 127)),
        ("small", ConfusionMatrix::new(13, 1, 1, 32)),
        ("eager", ConfusionMatrix::new(14, 14, 0, 19)),
        ("noisy", ConfusionMatrix::new(12, 12, 1, 16)),
    ];
    println!(
        "{:<8} {:>6} {:>8} {:>6} {:>6} {:>9}",
        "config", "F1", "macroF1", "acc", "recall", "precision"
    );
    for (name, cm) in rows {
        let r = classification_report(cm, &BTreeMap::new(), &BTreeMap::new(), 0)?;
        let c = &r.rounded;
        println!(
            "{name:<8} {:>6} {:>8} {:>6} {:>6} {:>9}",
            c.f1, c.macro_f1, c.accuracy, c.recall, c.precision
        );
    }

    let truths: BTreeMap<u32, u8> = [(1, 10), (2, 0), (3, 20), (4, 14)].into();
    let preds: BTreeMap<u32, Option<u8>> =
        [(1, Some(12)), (2, Some(2)), (3, Some(18)), (4, Some(14)), (5, None)].into();
    let reg = regression_report(&preds, &truths)?;
    println!(
        "\nregression: {:?} (n={}, excluded {})",
        reg.rounded, reg.n, reg.n_excluded
    );
    Ok(())
}
