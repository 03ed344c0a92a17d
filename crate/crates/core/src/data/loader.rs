use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DomainDataset;
use crate::error::{Error, Result};

/// One epoch of same-domain pairs `(a[i], b[i])`, cut into batches of `batch_size` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpochPairing {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub batch_size: usize,
}

impl EpochPairing {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn num_batches(&self) -> usize {
        self.a.len().div_ceil(self.batch_size)
    }

    pub fn batches(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.a.chunks(self.batch_size).zip(self.b.chunks(self.batch_size))
    }
}

/// Shuffles each domain, folds it into first and second halves and pairs them
/// position-wise; the pair order is then shuffled globally.
///
/// An odd domain's leftover sample is paired with a random already-paired
/// sample of the same domain; a single-sample domain pairs with itself.
pub fn build_double_loader(dataset: &DomainDataset, batch_size: usize, seed: u64) -> Result<EpochPairing> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if dataset.is_empty() {
        return Err(Error::Usage("double loader needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(dataset.len() / 2 + 1);
    for (_, mut members) in dataset.domain_index() {
        members.shuffle(&mut rng);
        let half = members.len() / 2;
        let (first, second) = members.split_at(half);
        pairs.extend(first.iter().copied().zip(second.iter().copied()));
        if members.len() % 2 == 1 {
            let leftover = members[members.len() - 1];
            let partner = if half == 0 { leftover } else { members[rng.gen_range(0..members.len() - 1)] };
            pairs.push((leftover, partner));
        }
    }
    pairs.shuffle(&mut rng);
    let (a, b) = pairs.into_iter().unzip();
    Ok(EpochPairing { a, b, batch_size })
}
