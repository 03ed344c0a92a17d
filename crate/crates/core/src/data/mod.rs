//! Domain-keyed image datasets and everything that builds or slices them.
//!
//! A [`DomainDataset`] stores flattened `H×W` pixel grids in `[0,1]`, one
//! label and one integer domain id per sample. Synthetic digits come from
//! [`generate_digits`]; real ones from IDX files via [`load_idx`].
//! [`apply_scenario`] adds wave noise from a [`NoiseBank`] and assigns domains,
//! and [`build_double_loader`] folds each domain into same-domain pairs.

mod digits;
mod idx;
mod loader;
mod noise;
mod scenario;
mod splits;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::method::{Batch, VoteLabel};
use crate::tensor::Tensor;

pub use digits::{generate_digits, DIGIT_SIZE};
pub use idx::{
    load_idx, parse_idx_images, parse_idx_labels, read_domain_ids, write_domain_ids, write_idx, IdxImages,
    IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use loader::{build_double_loader, EpochPairing};
pub use noise::{make_noise_bank, NoiseBank, Orientation};
pub use scenario::{apply_scenario, ShiftScenario};
pub use splits::{continual_splits, limit_domains, split_validation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Format(format!("unknown split '{s}'"))),
        }
    }
}

/// Samples with pixels, labels and domain ids, stored column-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainDataset {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
    labels: Vec<VoteLabel>,
    domains: Vec<u32>,
    split: Split,
}

impl DomainDataset {
    /// Checks lengths and that every pixel lies in `[0,1]`.
    pub fn new(
        height: usize,
        width: usize,
        pixels: Vec<f64>,
        labels: Vec<VoteLabel>,
        domains: Vec<u32>,
        split: Split,
    ) -> Result<Self> {
        let n = labels.len();
        if height == 0 || width == 0 {
            return Err(Error::Consistency("image dimensions must be positive".into()));
        }
        if pixels.len() != n * height * width || domains.len() != n {
            return Err(Error::Consistency(format!(
                "{} pixels, {} labels, {} domains for {height}×{width} images",
                pixels.len(),
                n,
                domains.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Consistency(format!("pixel value {p} outside [0,1]")));
        }
        Ok(Self {
            height,
            width,
            pixels,
            labels,
            domains,
            split,
        })
    }

    pub fn empty(height: usize, width: usize, split: Split) -> Self {
        Self {
            height,
            width,
            pixels: Vec::new(),
            labels: Vec::new(),
            domains: Vec::new(),
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn feature_dim(&self) -> usize {
        self.height * self.width
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn features(&self, i: usize) -> &[f64] {
        let d = self.feature_dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    pub fn labels(&self) -> &[VoteLabel] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &VoteLabel {
        &self.labels[i]
    }

    pub fn domains(&self) -> &[u32] {
        &self.domains
    }

    pub fn domain(&self, i: usize) -> u32 {
        self.domains[i]
    }

    pub fn set_domains(&mut self, domains: Vec<u32>) -> Result<()> {
        if domains.len() != self.len() {
            return Err(Error::Consistency(format!("{} domain ids for {} samples", domains.len(), self.len())));
        }
        self.domains = domains;
        Ok(())
    }

    /// Largest majority label plus one, or 0 when empty.
    pub fn num_classes(&self) -> usize {
        self.labels.iter().map(|l| l.majority() + 1).max().unwrap_or(0)
    }

    pub fn majority_labels(&self) -> Vec<usize> {
        self.labels.iter().map(VoteLabel::majority).collect()
    }

    /// Sample indices per domain id, domains ascending, indices ascending.
    pub fn domain_index(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &d) in self.domains.iter().enumerate() {
            map.entry(d).or_default().push(i);
        }
        map
    }

    pub fn num_domains(&self) -> usize {
        self.domain_index().len()
    }

    /// New dataset holding the given samples in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let d = self.feature_dim();
        let mut pixels = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            pixels.extend_from_slice(self.features(i));
        }
        Self {
            height: self.height,
            width: self.width,
            pixels,
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            domains: indices.iter().map(|&i| self.domains[i]).collect(),
            split: self.split,
        }
    }

    /// Appends `other`'s samples; image sizes must agree.
    pub fn extend(&mut self, other: &DomainDataset) -> Result<()> {
        if (self.height, self.width) != (other.height, other.width) {
            return Err(Error::Consistency(format!(
                "cannot merge {}×{} with {}×{} images",
                self.height, self.width, other.height, other.width
            )));
        }
        self.pixels.extend_from_slice(&other.pixels);
        self.labels.extend(other.labels.iter().cloned());
        self.domains.extend_from_slice(&other.domains);
        Ok(())
    }

    /// `[n × H·W]` feature matrix of the given samples.
    pub fn feature_matrix(&self, indices: &[usize]) -> Result<Tensor> {
        let d = self.feature_dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.features(i));
        }
        Tensor::matrix(indices.len(), d, data)
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Batch> {
        Batch::new(
            self.feature_matrix(indices)?,
            indices.iter().map(|&i| self.labels[i].clone()).collect(),
            indices.iter().map(|&i| self.domains[i]).collect(),
        )
    }

    pub(crate) fn pixels_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.feature_dim();
        &mut self.pixels[i * d..(i + 1) * d]
    }
}
