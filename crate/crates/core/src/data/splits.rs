use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DomainDataset, Split};
use crate::error::{Error, Result};

/// Keeps `n` randomly chosen domains of a training set, samples in original order.
pub fn limit_domains(dataset: &DomainDataset, n: usize, seed: u64) -> Result<DomainDataset> {
    let index = dataset.domain_index();
    if n == 0 || n > index.len() {
        return Err(Error::Config(format!("cannot keep {n} of {} domains", index.len())));
    }
    if n == index.len() {
        return Ok(dataset.clone());
    }
    let ids: Vec<u32> = index.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep: Vec<u32> = index::sample(&mut rng, ids.len(), n).iter().map(|i| ids[i]).collect();
    let rows: Vec<usize> = (0..dataset.len()).filter(|&i| keep.contains(&dataset.domain(i))).collect();
    Ok(dataset.subset(&rows))
}

/// Moves `fraction` of every domain's samples (rounded down) to a validation set.
pub fn split_validation(dataset: &DomainDataset, fraction: f64, seed: u64) -> Result<(DomainDataset, DomainDataset)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("validation fraction must be in [0,1), got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(dataset.len());
    let mut val = Vec::new();
    for (_, mut members) in dataset.domain_index() {
        members.shuffle(&mut rng);
        let k = (members.len() as f64 * fraction).floor() as usize;
        val.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((dataset.subset(&train), dataset.subset(&val).with_split(Split::Val)))
}

/// Continual-learning schedule over domains in ascending id order.
///
/// Entry 0 holds the first `pretrain` domains. Entry `s` holds the next
/// `step_size` domains in full plus `replay` random samples from every domain
/// seen before it (all of them when a domain is smaller).
pub fn continual_splits(
    dataset: &DomainDataset,
    pretrain: usize,
    step_size: usize,
    steps: usize,
    replay: usize,
    seed: u64,
) -> Result<Vec<DomainDataset>> {
    let index = dataset.domain_index();
    let needed = pretrain + step_size * steps;
    if pretrain == 0 || step_size == 0 || needed > index.len() {
        return Err(Error::Config(format!(
            "continual schedule needs {needed} domains ({pretrain} + {steps}×{step_size}), dataset has {}",
            index.len()
        )));
    }
    let domains: Vec<&Vec<usize>> = index.values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schedule = Vec::with_capacity(steps + 1);
    let first: Vec<usize> = domains[..pretrain].iter().flat_map(|m| m.iter().copied()).collect();
    schedule.push(dataset.subset(&first));
    for s in 0..steps {
        let start = pretrain + s * step_size;
        let mut rows: Vec<usize> = domains[start..start + step_size].iter().flat_map(|m| m.iter().copied()).collect();
        for members in &domains[..start] {
            let k = replay.min(members.len());
            rows.extend(index::sample(&mut rng, members.len(), k).iter().map(|i| members[i]));
        }
        rows.sort_unstable();
        schedule.push(dataset.subset(&rows));
    }
    Ok(schedule)
}
