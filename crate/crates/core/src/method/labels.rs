use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sample's supervision: a single class (0-based) or expert vote counts per class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteLabel {
    Single(usize),
    Votes(Vec<u32>),
}

impl VoteLabel {
    pub fn votes(counts: Vec<u32>) -> Result<Self> {
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::Usage("vote label needs at least one positive vote".into()));
        }
        Ok(VoteLabel::Votes(counts))
    }

    /// Class used for metrics and for the decoder's prototype lookup.
    pub fn majority(&self) -> usize {
        match self {
            VoteLabel::Single(y) => *y,
            VoteLabel::Votes(v) => majority_vote(v).map(|(m, _)| m).unwrap_or(0),
        }
    }

    /// Classes that enter the soft cross-entropy.
    pub fn valid_set(&self) -> Vec<usize> {
        match self {
            VoteLabel::Single(y) => vec![*y],
            VoteLabel::Votes(v) => majority_vote(v).map(|(_, s)| s).unwrap_or_default(),
        }
    }

    pub fn check(&self, num_classes: usize) -> Result<()> {
        match self {
            VoteLabel::Single(y) if *y >= num_classes => {
                Err(Error::Usage(format!("class {y} out of range for {num_classes} classes")))
            }
            VoteLabel::Votes(v) if v.len() != num_classes => Err(Error::Usage(format!(
                "{} vote counts for {num_classes} classes",
                v.len()
            ))),
            VoteLabel::Votes(v) if v.iter().all(|&c| c == 0) => {
                Err(Error::Usage("all-zero vote counts".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Majority class (lowest index on ties) and the valid set
/// `{k : votes_k > max_votes / 2}`, both 0-based.
pub fn majority_vote(votes: &[u32]) -> Result<(usize, Vec<usize>)> {
    let max = votes.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::Usage("majority vote over all-zero counts".into()));
    }
    let majority = votes.iter().position(|&v| v == max).expect("max is present");
    // votes_k > max/2  <=>  2·votes_k > max, exact in integers
    let valid = (0..votes.len()).filter(|&k| 2 * votes[k] > max).collect();
    Ok((majority, valid))
}
