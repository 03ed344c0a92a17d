use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::eval::Metrics;
use crate::method::LossBreakdown;

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub accuracy: MeanStd,
    pub kappa: MeanStd,
    pub macro_f1: MeanStd,
}

impl MetricsSummary {
    pub fn of(metrics: &[Metrics]) -> Self {
        let col = |f: fn(&Metrics) -> f64| MeanStd::of(&metrics.iter().map(f).collect::<Vec<_>>());
        Self {
            accuracy: col(|m| m.accuracy),
            kappa: col(|m| m.kappa),
            macro_f1: col(|m| m.macro_f1),
        }
    }
}

/// Averaged objectives of one epoch plus the validation accuracy after it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub seed: u64,
    pub epoch: usize,
    pub sup: f64,
    pub mmd: f64,
    pub rec: f64,
    pub sim: f64,
    pub total: f64,
    pub val_accuracy: Option<f64>,
}

impl EpochRecord {
    pub fn new(seed: u64, epoch: usize, loss: LossBreakdown, val_accuracy: Option<f64>) -> Self {
        Self {
            seed,
            epoch,
            sup: loss.sup,
            mmd: loss.mmd,
            rec: loss.rec,
            sim: loss.sim,
            total: loss.total,
            val_accuracy,
        }
    }
}

/// Outcome of training one seed; `best_epoch` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub best_epoch: usize,
    pub val: Metrics,
    pub test: Metrics,
    pub curve: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
    pub val: MetricsSummary,
    pub test: MetricsSummary,
}

impl MetricsReport {
    pub fn new(config: ExperimentConfig, runs: Vec<RunResult>) -> Self {
        let val = MetricsSummary::of(&runs.iter().map(|r| r.val).collect::<Vec<_>>());
        let test = MetricsSummary::of(&runs.iter().map(|r| r.test).collect::<Vec<_>>());
        Self { config, runs, val, test }
    }

    pub fn rows(&self) -> Vec<MetricsRow> {
        self.runs
            .iter()
            .map(|r| MetricsRow {
                model: self.config.model.to_string(),
                scenario: self.config.scenario.to_string(),
                seed: r.seed,
                best_epoch: r.best_epoch,
                val_accuracy: r.val.accuracy,
                val_kappa: r.val.kappa,
                val_macro_f1: r.val.macro_f1,
                test_accuracy: r.test.accuracy,
                test_kappa: r.test.kappa,
                test_macro_f1: r.test.macro_f1,
            })
            .collect()
    }

    pub fn curve(&self) -> Vec<EpochRecord> {
        self.runs.iter().flat_map(|r| r.curve.iter().copied()).collect()
    }
}

/// One line of `metrics.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub scenario: String,
    pub seed: u64,
    pub best_epoch: usize,
    pub val_accuracy: f64,
    pub val_kappa: f64,
    pub val_macro_f1: f64,
    pub test_accuracy: f64,
    pub test_kappa: f64,
    pub test_macro_f1: f64,
}

/// One line of `sweep.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub domains: usize,
    pub train_samples: usize,
    pub test_accuracy_mean: f64,
    pub test_accuracy_std: f64,
    pub test_kappa_mean: f64,
    pub test_macro_f1_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<MetricsReport>,
}

/// One line of `continual.csv`; step 0 is pretraining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinualRow {
    pub seed: u64,
    pub step: usize,
    pub domains_seen: usize,
    pub train_samples: usize,
    pub test_accuracy: f64,
    pub test_kappa: f64,
    pub test_macro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinualReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ContinualRow>,
}

/// One line of `probe_report.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub comparison: String,
    pub mean_cosine: f64,
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
