//! Majority votes and the classification metrics used in every report.
//!
//!     cargo run --example metrics

use manydg::eval::{majority_vote, ConfusionMatrix, Metrics};

fn main() -> manydg::Result<()> {
    let (label, valid) = majority_vote(&[8, 0, 5, 3, 2, 1])?;
    println!("votes [8,0,5,3,2,1]: majority class {label}, valid set (more than half the top count) {valid:?}");

    // rows are true classes, columns predictions
    let cm = ConfusionMatrix::from_counts(2, vec![40, 10, 20, 30])?;
    let m = Metrics::from_confusion(&cm)?;
    println!("accuracy {:.4}, kappa {:.4}, macro-F1 {:.4}", m.accuracy, m.kappa, m.macro_f1);
    Ok(())
}
