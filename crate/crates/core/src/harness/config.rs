use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::ShiftScenario;
use crate::error::{Error, Result};
use crate::method::LossWeights;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Base,
    ManyDg,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Base => "base",
            ModelKind::ManyDg => "manydg",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "base" => Ok(ModelKind::Base),
            "manydg" => Ok(ModelKind::ManyDg),
            _ => Err(Error::Config(format!("unknown model '{s}' (expected base or manydg)"))),
        }
    }
}

/// Everything one experiment needs. Keys of the key=value format are the field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ShiftScenario,
    pub model: ModelKind,
    pub epochs: usize,
    /// Samples per step for the baseline, pairs per step for the paired model.
    pub batch_size: usize,
    pub hidden_dim: usize,
    /// Width of the first backbone layer.
    pub backbone_width: usize,
    pub temperature: f64,
    pub lambda_mmd: f64,
    pub lambda_rec: f64,
    pub lambda_sim: f64,
    pub lr: f64,
    pub weight_decay: f64,
    /// First training seed; runs use `seed..seed + num_seeds`.
    pub seed: u64,
    pub num_seeds: usize,
    /// Seed for data generation, noise and scenario draws; shared by all runs.
    pub data_seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub num_waves: usize,
    pub alpha: f64,
    pub val_fraction: f64,
    pub domain_limit: Option<usize>,
    pub continual_pretrain: usize,
    pub continual_step: usize,
    pub continual_steps: usize,
    pub continual_replay: usize,
    pub continual_epochs: usize,
    /// Domain counts for the small-data sweep; empty means full, half and a tenth.
    pub sweep_counts: Vec<usize>,
    pub out_dir: PathBuf,
    pub save_checkpoint: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ShiftScenario::Original,
            model: ModelKind::ManyDg,
            epochs: 15,
            batch_size: 128,
            hidden_dim: 64,
            backbone_width: 64,
            temperature: 0.5,
            lambda_mmd: 1.0,
            lambda_rec: 1.0,
            lambda_sim: 1.0,
            lr: 5e-4,
            weight_decay: 1e-5,
            seed: 0,
            num_seeds: 1,
            data_seed: 0,
            train_size: 10_000,
            test_size: 2_000,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            num_waves: 32,
            alpha: 0.5,
            val_fraction: 0.1,
            domain_limit: None,
            continual_pretrain: 10,
            continual_step: 2,
            continual_steps: 10,
            continual_replay: 4,
            continual_epochs: 2,
            sweep_counts: Vec::new(),
            out_dir: PathBuf::from("runs"),
            save_checkpoint: true,
        }
    }
}

const OPTIONAL_NUMBERS: [&str; 1] = ["domain_limit"];

impl ExperimentConfig {
    pub fn weights(&self) -> LossWeights {
        LossWeights {
            mmd: self.lambda_mmd,
            rec: self.lambda_rec,
            sim: self.lambda_sim,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.num_seeds as u64).map(|i| self.seed + i).collect()
    }

    pub fn uses_idx(&self) -> bool {
        self.train_images.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("hidden_dim", self.hidden_dim),
            ("backbone_width", self.backbone_width),
            ("num_seeds", self.num_seeds),
            ("train_size", self.train_size),
            ("test_size", self.test_size),
            ("num_waves", self.num_waves),
            ("continual_pretrain", self.continual_pretrain),
            ("continual_step", self.continual_step),
            ("continual_epochs", self.continual_epochs),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{k} must be positive")));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight_decay must be non-negative, got {}", self.weight_decay)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must be in (0,1], got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!("val_fraction must be in [0,1), got {}", self.val_fraction)));
        }
        if self.domain_limit == Some(0) {
            return Err(Error::Config("domain_limit must be positive".into()));
        }
        if self.sweep_counts.contains(&0) {
            return Err(Error::Config("sweep_counts must be positive".into()));
        }
        self.weights().validate()?;
        let paths = [&self.train_images, &self.train_labels, &self.test_images, &self.test_labels];
        let given = paths.iter().filter(|p| p.is_some()).count();
        if given != 0 && given != 4 {
            return Err(Error::Config(
                "IDX input needs train_images, train_labels, test_images and test_labels together".into(),
            ));
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut doc = serde_json::to_value(&*self)?;
        let map = doc.as_object_mut().expect("config serializes to an object");
        let current = map
            .get(key)
            .ok_or_else(|| Error::Config(format!("unknown config key '{key}'")))?;
        let v = value.trim();
        let bad = || Error::Config(format!("invalid value '{v}' for '{key}'"));
        let optional = OPTIONAL_NUMBERS.contains(&key) || key.ends_with("_images") || key.ends_with("_labels");
        let parsed = match current {
            _ if key == "scenario" => Value::from(v.parse::<ShiftScenario>()?.name()),
            _ if key == "model" => Value::from(v.parse::<ModelKind>()?.name()),
            _ if optional && (v.is_empty() || v == "none") => Value::Null,
            _ if OPTIONAL_NUMBERS.contains(&key) => Value::from(v.parse::<u64>().map_err(|_| bad())?),
            Value::Bool(_) => Value::Bool(v.parse().map_err(|_| bad())?),
            Value::Number(n) if n.is_f64() => Value::from(v.parse::<f64>().map_err(|_| bad())?),
            Value::Number(_) => Value::from(v.parse::<u64>().map_err(|_| bad())?),
            Value::Array(_) => Value::Array(
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<u64>().map(Value::from).map_err(|_| bad()))
                    .collect::<Result<_>>()?,
            ),
            _ => Value::String(v.to_string()),
        };
        map.insert(key.to_string(), parsed);
        *self = serde_json::from_value(doc).map_err(|e| Error::Config(format!("'{key}': {e}")))?;
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", n + 1)))?;
            self.set(k.trim(), v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text)
    }

    /// The key=value form, one field per line, readable by [`Self::from_kv_str`].
    pub fn to_kv_string(&self) -> String {
        let doc = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (k, v) in doc.as_object().expect("object") {
            let text = match v {
                Value::Null => "none".to_string(),
                Value::String(s) => s.clone(),
                Value::Array(a) => a.iter().map(Value::to_string).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {text}\n"));
        }
        out
    }
}
