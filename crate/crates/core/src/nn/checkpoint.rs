//! Parameter checkpoints.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! {
//!   "meta":   { ...model description, free-form... },
//!   "arrays": [ { "name": "backbone.0.weight", "shape": [64, 784], "data": [...] }, ... ]
//! }
//! ```
//!
//! `data` is row-major. Floats are written with shortest round-trip formatting,
//! so saving and reloading is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ParamSet;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub meta: serde_json::Value,
    pub arrays: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn from_params(meta: serde_json::Value, params: &ParamSet) -> Self {
        let arrays = params
            .iter()
            .map(|(name, t)| NamedArray {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: t.data().to_vec(),
            })
            .collect();
        Self { meta, arrays }
    }

    /// Copies every array into the same-named parameter; names and shapes must match exactly.
    pub fn load_into(&self, params: &mut ParamSet) -> Result<()> {
        if self.arrays.len() != params.len() {
            return Err(Error::Consistency(format!(
                "checkpoint has {} arrays, model has {} parameters",
                self.arrays.len(),
                params.len()
            )));
        }
        for a in &self.arrays {
            let id = params
                .id_of(&a.name)
                .ok_or_else(|| Error::Consistency(format!("unknown parameter {}", a.name)))?;
            params.set(id, Tensor::new(a.shape.clone(), a.data.clone())?)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
