//! Trains the paired model, dumps v, z and both projections for every sample,
//! and writes the linear-probe, z-similarity and norm-scatter tables.
//!
//!     cargo run --release --example embedding_probe -- [out_dir]

use std::path::PathBuf;

use manydg::data::ShiftScenario;
use manydg::eval::ProbeConfig;
use manydg::harness::{embed_datasets, prepare_data, probe_report, run_on, ExperimentConfig};

fn main() -> manydg::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-probe".into()));
    let cfg = ExperimentConfig {
        scenario: ShiftScenario::Stepped,
        epochs: 8,
        train_size: 4000,
        test_size: 1000,
        ..ExperimentConfig::default()
    };
    let data = prepare_data(&cfg)?;
    let (_, models) = run_on(&cfg, &data)?;
    let dump = embed_datasets(&models[0], &[&data.train, &data.val, &data.test])?;
    let summary = probe_report(&dump, &ProbeConfig::default(), &out)?;
    dump.save(&out.join("embeddings.csv"))?;
    for (name, cosine) in summary.probe.rows() {
        println!("{name:<30} {cosine:+.4}");
    }
    let z = summary.z_similarity;
    println!("z cosine within domains {:.4}, across domains {:.4}", z.within, z.cross);
    println!("tables in {}", out.display());
    Ok(())
}
