//! Retrains with fewer and fewer training domains, scoring every run on the
//! same test split.
//!
//!     cargo run --release --example small_data_sweep -- [out_dir]

use std::path::PathBuf;

use manydg::data::ShiftScenario;
use manydg::harness::{run_small_data_sweep, ExperimentConfig};

fn main() -> manydg::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-sweep".into()));
    let cfg = ExperimentConfig {
        scenario: ShiftScenario::AllShift,
        epochs: 10,
        train_size: 3000,
        test_size: 1000,
        save_checkpoint: false,
        out_dir: out,
        ..ExperimentConfig::default()
    };
    let sweep = run_small_data_sweep(&cfg, &[32, 16, 4])?;
    println!("{:>8} {:>8} {:>10}", "domains", "samples", "accuracy");
    for r in &sweep.rows {
        println!("{:>8} {:>8} {:>10.4}", r.domains, r.train_samples, r.test_accuracy_mean);
    }
    Ok(())
}
