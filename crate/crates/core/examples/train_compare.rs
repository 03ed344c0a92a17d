//! Trains the plain classifier and the paired model on one shift scenario
//! and compares their test metrics.
//!
//!     cargo run --release --example train_compare -- [scenario] [epochs]

use manydg::data::ShiftScenario;
use manydg::harness::{prepare_data, run_on, ExperimentConfig, ModelKind};

fn main() -> manydg::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: ShiftScenario = args.next().as_deref().unwrap_or("half-all").parse()?;
    let epochs = args.next().map_or(Ok(5), |e| e.parse()).map_err(|_| manydg::Error::Usage("epochs".into()))?;
    let base = ExperimentConfig {
        scenario,
        epochs,
        train_size: 4000,
        test_size: 1000,
        save_checkpoint: false,
        ..ExperimentConfig::default()
    };
    let data = prepare_data(&base)?;
    println!("{scenario}: {} train samples over {} domains", data.train.len(), data.train.num_domains());
    for model in [ModelKind::Base, ModelKind::ManyDg] {
        let (report, _) = run_on(&ExperimentConfig { model, ..base.clone() }, &data)?;
        let t = report.test;
        println!(
            "{model:<7} accuracy {:.4}  kappa {:.4}  macro-F1 {:.4}  (best epoch {})",
            t.accuracy.mean, t.kappa.mean, t.macro_f1.mean, report.runs[0].best_epoch
        );
    }
    Ok(())
}
