//! Renders synthetic digits, applies every covariate-shift scenario and
//! exports one of them as IDX files with a domain-id sidecar.
//!
//!     cargo run --example shift_scenarios -- [out_dir]

use std::path::PathBuf;

use manydg::data::{
    apply_scenario, generate_digits, make_noise_bank, write_domain_ids, write_idx, ShiftScenario, Split, DIGIT_SIZE,
};

fn ascii(pixels: &[f64]) -> String {
    pixels
        .chunks(DIGIT_SIZE)
        .map(|row| row.iter().map(|&p| [' ', '.', ':', '+', '#'][((p * 4.0).round() as usize).min(4)]).collect())
        .collect::<Vec<String>>()
        .join("\n")
}

fn main() -> manydg::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-idx".into()));
    let train = generate_digits(2000, Split::Train, 1)?;
    let test = generate_digits(1000, Split::Test, 2)?;
    let bank = make_noise_bank(DIGIT_SIZE, DIGIT_SIZE, 32, 0.5, 0)?;

    println!("{:<17} {:>8} {:>8} {:>8}", "scenario", "train %", "test %", "domains");
    for sc in ShiftScenario::ALL {
        let (tr, te) = (apply_scenario(&train, sc, &bank, 7)?, apply_scenario(&test, sc, &bank, 7)?);
        let shifted = |d: &[u32]| 100.0 * d.iter().filter(|&&x| x != 0).count() as f64 / d.len() as f64;
        println!(
            "{:<17} {:>8.1} {:>8.1} {:>8}",
            sc.name(),
            shifted(tr.domains()),
            shifted(te.domains()),
            tr.num_domains()
        );
    }

    let stepped = apply_scenario(&train, ShiftScenario::Stepped, &bank, 7)?;
    let i = (0..stepped.len()).find(|&i| stepped.domain(i) != 0).unwrap();
    println!(
        "\nsample {i}: label {}, domain {}\n{}",
        stepped.label(i).majority(),
        stepped.domain(i),
        ascii(stepped.features(i))
    );

    std::fs::create_dir_all(&out).map_err(|e| manydg::Error::Usage(e.to_string()))?;
    write_idx(&stepped, &out.join("train-images-idx3-ubyte"), &out.join("train-labels-idx1-ubyte"))?;
    write_domain_ids(&stepped, &out.join("train-domains.txt"))?;
    println!("wrote {} IDX samples to {}", stepped.len(), out.display());
    Ok(())
}
