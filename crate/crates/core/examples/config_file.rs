//! Parses a key=value experiment file and prints the fully resolved config.
//!
//!     cargo run --example config_file -- [path]

use manydg::harness::ExperimentConfig;

const SAMPLE: &str = "
# opposite stepped, three seeds
scenario = opposite-stepped
model = manydg
epochs = 15
num_seeds = 3
lambda_mmd = 0.5
out_dir = runs/opposite
";

fn main() -> manydg::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::from_kv_str(SAMPLE)?,
    };
    print!("{}", cfg.to_kv_string());
    Ok(())
}
