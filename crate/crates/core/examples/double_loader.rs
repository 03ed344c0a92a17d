//! Shows how each epoch pairs samples that share a domain.
//!
//!     cargo run --example double_loader

use manydg::data::{build_double_loader, DomainDataset, Split};
use manydg::method::VoteLabel;

fn main() -> manydg::Result<()> {
    // domain sizes 4, 3 and 1
    let domains = vec![0, 0, 0, 0, 1, 1, 1, 2];
    let n = domains.len();
    let ds = DomainDataset::new(
        1,
        1,
        vec![0.0; n],
        (0..n).map(|i| VoteLabel::Single(i % 2)).collect(),
        domains,
        Split::Train,
    )?;
    for epoch in 0..3 {
        let pairing = build_double_loader(&ds, 2, epoch)?;
        let batches: Vec<String> = pairing
            .batches()
            .map(|(a, b)| {
                let pairs: Vec<String> =
                    a.iter().zip(b).map(|(&x, &y)| format!("{x}~{y} (d{})", ds.domain(x))).collect();
                format!("[{}]", pairs.join(", "))
            })
            .collect();
        println!("epoch {epoch}: {}", batches.join(" "));
    }
    Ok(())
}
