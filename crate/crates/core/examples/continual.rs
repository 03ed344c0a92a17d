//! Pretrains on ten domains, then adds two new domains per step with a small
//! replay buffer from every earlier domain.
//!
//!     cargo run --release --example continual -- [out_dir]

use std::path::PathBuf;

use manydg::data::ShiftScenario;
use manydg::harness::{run_continual, ExperimentConfig};

fn main() -> manydg::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-continual".into()));
    let cfg = ExperimentConfig {
        scenario: ShiftScenario::AllShift,
        epochs: 10,
        train_size: 3000,
        test_size: 1000,
        out_dir: out,
        ..ExperimentConfig::default()
    };
    for r in run_continual(&cfg)?.rows {
        println!("step {:>2}: {:>2} domains seen, {:>4} samples, test accuracy {:.4}", r.step, r.domains_seen, r.train_samples, r.test_accuracy);
    }
    Ok(())
}
