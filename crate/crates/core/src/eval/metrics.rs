use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `K×K` counts; rows are true classes, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            k: num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_counts(num_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != num_classes * num_classes {
            return Err(Error::dim("confusion matrix", format!("{} counts for {num_classes} classes", counts.len())));
        }
        Ok(Self { k: num_classes, counts })
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::dim("confusion matrix", format!("{} labels, {} predictions", truth.len(), predicted.len())));
        }
        let mut cm = Self::new(num_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        if truth >= self.k || predicted >= self.k {
            return Err(Error::Usage(format!("class pair ({truth}, {predicted}) outside 0..{}", self.k)));
        }
        self.counts[truth * self.k + predicted] += 1;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.k).map(|j| self.get(truth, j)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.k).map(|i| self.get(i, predicted)).sum()
    }

    fn nonempty(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::Usage("metrics of an empty confusion matrix".into())),
            n => Ok(n as f64),
        }
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(cm.trace() as f64 / cm.nonempty()?)
}

/// `(p_o − p_e)/(1 − p_e)`; 0 when `p_e = 1`.
pub fn cohens_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonempty()?;
    let agree = cm.trace() as f64;
    let chance: f64 = (0..cm.k).map(|c| cm.row_sum(c) as f64 * cm.col_sum(c) as f64).sum();
    let den = n * n - chance;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((n * agree - chance) / den)
}

/// Unweighted mean of per-class F1; a class never seen nor predicted scores 0.
pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    cm.nonempty()?;
    let sum: f64 = (0..cm.k)
        .map(|c| {
            let tp = cm.get(c, c) as f64;
            let den = cm.row_sum(c) as f64 + cm.col_sum(c) as f64;
            if den == 0.0 {
                0.0
            } else {
                2.0 * tp / den
            }
        })
        .sum();
    Ok(sum / cm.k as f64)
}

/// Accuracy, kappa and macro-F1 of one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub kappa: f64,
    pub macro_f1: f64,
}

impl Metrics {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self> {
        Ok(Self {
            accuracy: accuracy(cm)?,
            kappa: cohens_kappa(cm)?,
            macro_f1: macro_f1(cm)?,
        })
    }
}
