use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DomainDataset, NoiseBank, Split};
use crate::error::{Error, Result};

/// Which labels get wave noise, and how often, on each split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftScenario {
    Original,
    AllShift,
    Stepped,
    OppositeStepped,
    HalfAll,
    Random,
    TrainOnly,
    TestOnly,
}

impl ShiftScenario {
    pub const ALL: [ShiftScenario; 8] = [
        ShiftScenario::Original,
        ShiftScenario::AllShift,
        ShiftScenario::Stepped,
        ShiftScenario::OppositeStepped,
        ShiftScenario::HalfAll,
        ShiftScenario::Random,
        ShiftScenario::TrainOnly,
        ShiftScenario::TestOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShiftScenario::Original => "original",
            ShiftScenario::AllShift => "all-shift",
            ShiftScenario::Stepped => "stepped",
            ShiftScenario::OppositeStepped => "opposite-stepped",
            ShiftScenario::HalfAll => "half-all",
            ShiftScenario::Random => "random",
            ShiftScenario::TrainOnly => "train-only",
            ShiftScenario::TestOnly => "test-only",
        }
    }

    fn is_stepped(self) -> bool {
        matches!(self, ShiftScenario::Stepped | ShiftScenario::OppositeStepped)
    }

    /// Per-label shift probability on `split`; validation data follows the training rule.
    ///
    /// `seed` only matters for [`ShiftScenario::Random`], whose train and test
    /// proportions are drawn independently.
    pub fn shift_probabilities(self, split: Split, num_classes: usize, seed: u64) -> Result<Vec<f64>> {
        if self.is_stepped() && num_classes != 10 {
            return Err(Error::Config(format!(
                "scenario {} needs 10 classes, dataset has {num_classes}",
                self.name()
            )));
        }
        let train = split != Split::Test;
        let k = num_classes;
        Ok(match self {
            ShiftScenario::Original => vec![0.0; k],
            ShiftScenario::AllShift => vec![1.0; k],
            ShiftScenario::HalfAll => vec![0.5; k],
            ShiftScenario::Stepped => (0..k).map(|c| c as f64 / 10.0).collect(),
            ShiftScenario::OppositeStepped if train => (0..k).map(|c| c as f64 / 10.0).collect(),
            ShiftScenario::OppositeStepped => (0..k).map(|c| (9 - c) as f64 / 10.0).collect(),
            ShiftScenario::TrainOnly => vec![if train { 1.0 } else { 0.0 }; k],
            ShiftScenario::TestOnly => vec![if train { 0.0 } else { 1.0 }; k],
            ShiftScenario::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ if train { 0x7261_696e } else { 0x7465_7374 });
                (0..k).map(|_| rng.gen::<f64>()).collect()
            }
        })
    }
}

impl fmt::Display for ShiftScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShiftScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL.into_iter().find(|sc| sc.name() == norm).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|s| s.name()).collect();
            Error::Config(format!("unknown scenario '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// Adds noise to a random subset of samples per label and assigns domains:
/// a sample shifted by wave `n` lands in domain `n + 1`, unshifted samples in domain 0.
/// Stepped scenarios require labels in `0..10`.
pub fn apply_scenario(
    dataset: &DomainDataset,
    scenario: ShiftScenario,
    bank: &NoiseBank,
    seed: u64,
) -> Result<DomainDataset> {
    if (bank.height(), bank.width()) != (dataset.height(), dataset.width()) {
        return Err(Error::dim(
            "apply_scenario",
            format!(
                "noise bank is {}×{}, images are {}×{}",
                bank.height(),
                bank.width(),
                dataset.height(),
                dataset.width()
            ),
        ));
    }
    let observed = dataset.num_classes();
    let num_classes = if scenario.is_stepped() {
        if observed > 10 {
            return Err(Error::Config(format!(
                "scenario {} needs labels in 0..10, found label {}",
                scenario.name(),
                observed - 1
            )));
        }
        10
    } else {
        observed
    };
    let probs = scenario.shift_probabilities(dataset.split(), num_classes, seed)?;
    let split_salt: u64 = match dataset.split() {
        Split::Train => 1,
        Split::Val => 2,
        Split::Test => 3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(split_salt));
    let mut out = dataset.clone();
    let mut domains = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let p = probs[dataset.label(i).majority()];
        let coin: f64 = rng.gen();
        let wave = rng.gen_range(0..bank.num_waves());
        if coin < p {
            bank.shift(out.pixels_mut(i), wave);
            domains.push(wave as u32 + 1);
        } else {
            domains.push(0);
        }
    }
    out.set_domains(domains)?;
    Ok(out)
}
