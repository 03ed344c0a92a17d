use serde::{Deserialize, Serialize};

use super::labels::VoteLabel;
use super::projection::NORM_EPS;
use crate::error::{Error, Result};
use crate::tensor::{Tensor, Var};

/// Objective values for one step, plus their weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub sup: f64,
    pub mmd: f64,
    pub rec: f64,
    pub sim: f64,
    pub total: f64,
}

/// Weights of the auxiliary objectives: `total = sup + λ₁·mmd + λ₂·rec + λ₃·sim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mmd: f64,
    pub rec: f64,
    pub sim: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl LossWeights {
    /// The unweighted sum.
    pub fn uniform() -> Self {
        Self { mmd: 1.0, rec: 1.0, sim: 1.0 }
    }

    pub fn new(mmd: f64, rec: f64, sim: f64) -> Result<Self> {
        let w = Self { mmd, rec, sim };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.mmd, self.rec, self.sim].iter().all(|l| *l >= 0.0 && l.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("loss weights must be non-negative: {self:?}")))
        }
    }
}

/// Graph nodes of the four objectives.
#[derive(Clone, Copy, Debug)]
pub struct LossParts<'t> {
    pub sup: Var<'t>,
    pub mmd: Var<'t>,
    pub rec: Var<'t>,
    pub sim: Var<'t>,
}

impl<'t> LossParts<'t> {
    pub fn breakdown(&self, total: Var<'t>) -> Result<LossBreakdown> {
        Ok(LossBreakdown {
            sup: self.sup.item()?,
            mmd: self.mmd.item()?,
            rec: self.rec.item()?,
            sim: self.sim.item()?,
            total: total.item()?,
        })
    }
}

/// Row-wise cosine similarity `[m×1]`; a row whose either side has norm below ε contributes 0.
/// A 1-D input is a single row.
pub fn rows_cosine<'t>(a: Var<'t>, b: Var<'t>) -> Result<Var<'t>> {
    let an = a.scale_rows(a.rows_norm()?.recip_guarded(NORM_EPS)?)?;
    let bn = b.scale_rows(b.rows_norm()?.recip_guarded(NORM_EPS)?)?;
    an.rows_dot(bn)
}

/// Mutual reconstruction: `−⟨v/‖v‖, v̂/‖v̂‖⟩ − ⟨v'/‖v'‖, v̂'/‖v̂'‖⟩`, averaged over the batch.
pub fn loss_rec<'t>(v: Var<'t>, v_hat: Var<'t>, v2: Var<'t>, v2_hat: Var<'t>) -> Result<Var<'t>> {
    let c1 = rows_cosine(v, v_hat)?;
    let c2 = rows_cosine(v2, v2_hat)?;
    c1.add(c2)?.mean_rows()?.neg()
}

/// Domain-factor similarity: `−⟨z/‖z‖, z'/‖z'‖⟩`, averaged over the batch.
pub fn loss_sim<'t>(z: Var<'t>, z2: Var<'t>) -> Result<Var<'t>> {
    rows_cosine(z, z2)?.mean_rows()?.neg()
}

/// Normalized mean discrepancy `‖z_μ − v_μ‖² / ‖sg(v_μ)‖²` over a batch.
///
/// A batch whose `‖v_μ‖ < ε` yields a constant 0 and a warning.
pub fn loss_mmd<'t>(batch_z: Var<'t>, batch_v: Var<'t>) -> Result<Var<'t>> {
    loss_mmd_with(batch_z, batch_v, None)
}

/// `‖sg(v_μ)‖²` for a batch of features.
pub fn mmd_denominator(batch_v: &Tensor) -> Result<f64> {
    let (m, d) = batch_v.dims2();
    let mut mean = vec![0.0; d];
    for i in 0..m {
        for (acc, x) in mean.iter_mut().zip(batch_v.row(i)) {
            *acc += x / m as f64;
        }
    }
    Ok(mean.iter().map(|x| x * x).sum())
}

/// [`loss_mmd`] with the detached denominator optionally supplied as a fixed number.
pub fn loss_mmd_with<'t>(batch_z: Var<'t>, batch_v: Var<'t>, denominator: Option<f64>) -> Result<Var<'t>> {
    let zm = batch_z.mean_rows()?;
    let vm = batch_v.mean_rows()?;
    let den = match denominator {
        Some(d) => batch_z.tape().constant(Tensor::scalar(d)),
        None => {
            let sg = vm.stop_gradient()?;
            sg.inner_product(sg)?
        }
    };
    if den.item()?.sqrt() < NORM_EPS {
        log::warn!("degenerate batch: feature mean has near-zero norm, MMD term skipped");
        return Ok(batch_z.tape().constant(Tensor::scalar(0.0)));
    }
    let diff = zm.sub(vm)?;
    diff.inner_product(diff)?.div(den)
}

/// Per-row soft targets: uniform mass over each label's valid set.
pub fn vote_targets(labels: &[VoteLabel], num_classes: usize) -> Result<Tensor> {
    let mut data = vec![0.0; labels.len() * num_classes];
    for (i, l) in labels.iter().enumerate() {
        l.check(num_classes)?;
        let set = l.valid_set();
        let w = 1.0 / set.len() as f64;
        for k in set {
            data[i * num_classes + k] = w;
        }
    }
    Tensor::matrix(labels.len(), num_classes, data)
}

/// Batch mean of `−(1/|S|) Σ_{k∈S} log p_k`; `S` is `{y}` for single labels.
pub fn loss_sup<'t>(log_probs: Var<'t>, labels: &[VoteLabel]) -> Result<Var<'t>> {
    let (m, k) = log_probs.value().dims2();
    if labels.len() != m {
        return Err(Error::dim("loss_sup", format!("{m} rows, {} labels", labels.len())));
    }
    let targets = log_probs.tape().constant(vote_targets(labels, k)?);
    log_probs.inner_product(targets)?.scale(-1.0 / m as f64)
}

/// `sup + λ₁·mmd + λ₂·rec + λ₃·sim`
pub fn combined_loss<'t>(parts: &LossParts<'t>, weights: &LossWeights) -> Result<Var<'t>> {
    weights.validate()?;
    parts
        .sup
        .add(parts.mmd.scale(weights.mmd)?)?
        .add(parts.rec.scale(weights.rec)?)?
        .add(parts.sim.scale(weights.sim)?)
}
