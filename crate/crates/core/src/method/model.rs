use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::labels::VoteLabel;
use super::losses::{
    combined_loss, loss_mmd_with, loss_rec, loss_sim, loss_sup, mmd_denominator, LossBreakdown, LossParts, LossWeights,
};
use super::projection::project_rows;
use crate::error::{Error, Result};
use crate::nn::{Adam, Backbone, Bound, Checkpoint, Linear, Mlp3, ParamSet, PrototypeHead};
use crate::tensor::{Tape, Tensor, Var};

/// A batch of flattened inputs with labels and domain ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub x: Tensor,
    pub labels: Vec<VoteLabel>,
    pub domains: Vec<u32>,
}

impl Batch {
    pub fn new(x: Tensor, labels: Vec<VoteLabel>, domains: Vec<u32>) -> Result<Self> {
        if x.rows() != labels.len() || labels.len() != domains.len() {
            return Err(Error::Consistency(format!(
                "batch has {} rows, {} labels, {} domains",
                x.rows(),
                labels.len(),
                domains.len()
            )));
        }
        Ok(Self { x, labels, domains })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn majority_labels(&self) -> Vec<usize> {
        self.labels.iter().map(VoteLabel::majority).collect()
    }
}

/// Siamese batch: row `i` of `a` and row `i` of `b` come from the same domain.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedBatch {
    pub a: Batch,
    pub b: Batch,
}

impl PairedBatch {
    pub fn new(a: Batch, b: Batch) -> Result<Self> {
        let pb = Self { a, b };
        pb.validate()?;
        Ok(pb)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() {
            return Err(Error::Usage(format!("paired sides differ in length: {} vs {}", self.a.len(), self.b.len())));
        }
        if let Some(i) = (0..self.a.len()).find(|&i| self.a.domains[i] != self.b.domains[i]) {
            return Err(Error::Usage(format!(
                "pair {i} mixes domains {} and {}",
                self.a.domains[i], self.b.domains[i]
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManyDgConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub temperature: f64,
    pub weights: LossWeights,
    /// Output width of every backbone layer; the last must equal `hidden_dim`.
    pub backbone_widths: Vec<usize>,
}

impl ManyDgConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            num_classes,
            temperature: 0.5,
            weights: LossWeights::uniform(),
            backbone_widths: vec![hidden_dim, hidden_dim],
        }
    }
}

/// Per-sample vectors of the three-step forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub v: Tensor,
    pub z: Tensor,
    pub v_par: Tensor,
    pub v_perp: Tensor,
}

/// One side of the Siamese forward pass.
#[derive(Clone, Copy, Debug)]
pub struct SideForward<'t> {
    pub v: Var<'t>,
    pub z: Var<'t>,
    pub v_par: Var<'t>,
    pub v_perp: Var<'t>,
    pub log_probs: Var<'t>,
}

/// Backbone `h_θ`, domain encoder `q_φ`, decoder `p_ψ` and prototype head `g_ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManyDgModel {
    config: ManyDgConfig,
    params: ParamSet,
    backbone: Backbone,
    encoder: Mlp3,
    decoder: Mlp3,
    head: PrototypeHead,
}

impl ManyDgModel {
    pub fn new(config: ManyDgConfig, seed: u64) -> Result<Self> {
        config.weights.validate()?;
        let d = config.hidden_dim;
        if config.backbone_widths.last() != Some(&d) {
            return Err(Error::Config(format!(
                "backbone must end at the hidden size {d}, got widths {:?}",
                config.backbone_widths
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let backbone = Backbone::new(&mut params, "backbone", config.input_dim, &config.backbone_widths, &mut rng)?;
        let encoder = Mlp3::new(&mut params, "encoder", d, d, d, &mut rng)?;
        let decoder = Mlp3::new(&mut params, "decoder", 2 * d, d, d, &mut rng)?;
        let head = PrototypeHead::new(&mut params, "head", config.num_classes, d, config.temperature, &mut rng)?;
        Ok(Self {
            config,
            params,
            backbone,
            encoder,
            decoder,
            head,
        })
    }

    pub fn config(&self) -> &ManyDgConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn backbone(&self) -> &Backbone {
        &self.backbone
    }

    pub fn encoder(&self) -> &Mlp3 {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp3 {
        &self.decoder
    }

    pub fn head(&self) -> &PrototypeHead {
        &self.head
    }

    pub fn set_weights(&mut self, weights: LossWeights) -> Result<()> {
        weights.validate()?;
        self.config.weights = weights;
        Ok(())
    }

    /// `v = h_θ(x)`, `z = q_φ(v)`.
    pub fn encode<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<(Var<'t>, Var<'t>)> {
        let v = self.backbone.forward(p, x)?;
        let z = self.encoder.forward(p, v)?;
        Ok((v, z))
    }

    /// Projection of `v` against `z` followed by the prototype head.
    pub fn head_forward<'t>(&self, p: &Bound<'t>, v: Var<'t>, z: Var<'t>) -> Result<(Var<'t>, Var<'t>, Var<'t>)> {
        let (v_par, v_perp) = project_rows(v, z)?;
        let log_probs = self.head.log_probs(p, v_perp)?;
        Ok((v_par, v_perp, log_probs))
    }

    pub fn side_forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<SideForward<'t>> {
        let (v, z) = self.encode(p, x)?;
        let (v_par, v_perp, log_probs) = self.head_forward(p, v, z)?;
        Ok(SideForward {
            v,
            z,
            v_par,
            v_perp,
            log_probs,
        })
    }

    /// `p_ψ(concat(z, w_y))` per row.
    pub fn decode<'t>(&self, p: &Bound<'t>, z: Var<'t>, classes: &[usize]) -> Result<Var<'t>> {
        if let Some(&y) = classes.iter().find(|&&y| y >= self.config.num_classes) {
            return Err(Error::Usage(format!("class {y} out of range for {} classes", self.config.num_classes)));
        }
        let w_y = p.var(self.head.prototypes).gather_rows(classes)?;
        self.decoder.forward(p, z.concat_cols(w_y)?)
    }

    /// All four objectives on a paired batch.
    ///
    /// `v̂' = p_ψ(z, y')` and `v̂ = p_ψ(z', y)`; supervision and MMD are averaged over the two sides.
    pub fn objective<'t>(&self, p: &Bound<'t>, batch: &PairedBatch) -> Result<(Var<'t>, LossParts<'t>)> {
        self.objective_with(p, batch, None)
    }

    /// Detached MMD denominators `‖v_μ‖²` of both sides under the current parameters.
    pub fn mmd_denominators(&self, batch: &PairedBatch) -> Result<[f64; 2]> {
        let a = self.embed(&batch.a.x)?;
        let b = self.embed(&batch.b.x)?;
        Ok([mmd_denominator(&a.v)?, mmd_denominator(&b.v)?])
    }

    /// [`Self::objective`] with the detached MMD denominators optionally pinned to given numbers.
    ///
    /// Pinning makes the objective an ordinary function whose derivative is what the tape computes,
    /// which is what finite differencing needs.
    pub fn objective_with<'t>(
        &self,
        p: &Bound<'t>,
        batch: &PairedBatch,
        mmd_den: Option<[f64; 2]>,
    ) -> Result<(Var<'t>, LossParts<'t>)> {
        batch.validate()?;
        let tape = p.vars().first().map(|v| v.tape()).ok_or_else(|| Error::Usage("empty parameter set".into()))?;
        let a = self.side_forward(p, tape.constant(batch.a.x.clone()))?;
        let b = self.side_forward(p, tape.constant(batch.b.x.clone()))?;

        let b_hat = self.decode(p, a.z, &batch.b.majority_labels())?;
        let a_hat = self.decode(p, b.z, &batch.a.majority_labels())?;

        let sup = loss_sup(a.log_probs, &batch.a.labels)?
            .add(loss_sup(b.log_probs, &batch.b.labels)?)?
            .scale(0.5)?;
        let mmd = loss_mmd_with(a.z, a.v, mmd_den.map(|d| d[0]))?
            .add(loss_mmd_with(b.z, b.v, mmd_den.map(|d| d[1]))?)?
            .scale(0.5)?;
        let rec = loss_rec(a.v, a_hat, b.v, b_hat)?;
        let sim = loss_sim(a.z, b.z)?;
        let parts = LossParts { sup, mmd, rec, sim };
        Ok((combined_loss(&parts, &self.config.weights)?, parts))
    }

    pub fn embed(&self, x: &Tensor) -> Result<Embeddings> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let f = self.side_forward(&p, tape.constant(x.clone()))?;
        Ok(Embeddings {
            v: (*f.v.value()).clone(),
            z: (*f.z.value()).clone(),
            v_par: (*f.v_par.value()).clone(),
            v_perp: (*f.v_perp.value()).clone(),
        })
    }

    /// Class probabilities `[batch×K]` from the three inference steps.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let f = self.side_forward(&p, tape.constant(x.clone()))?;
        Ok(f.log_probs.value().map(f64::exp))
    }

    /// Probabilities for given features `v` and domain factors `z`.
    pub fn classify_features(&self, v: &Tensor, z: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let (_, _, lp) = self.head_forward(&p, tape.constant(v.clone()), tape.constant(z.clone()))?;
        Ok(lp.value().map(f64::exp))
    }

    /// Reconstructs a feature vector from one domain factor and a class.
    pub fn decode_reconstruct(&self, z: &Tensor, y: usize) -> Result<Tensor> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let d = self.config.hidden_dim;
        if z.len() != d {
            return Err(Error::dim("decode_reconstruct", format!("z has {} entries, expected {d}", z.len())));
        }
        let zr = tape.constant(z.clone().reshape(vec![1, d])?);
        let out = self.decode(&p, zr, &[y])?;
        (*out.value()).clone().reshape(vec![d])
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let meta = serde_json::json!({ "kind": "manydg", "config": serde_json::to_value(&self.config)? });
        Ok(Checkpoint::from_params(meta, &self.params))
    }
}

/// One optimizer update on a paired batch; returns the objectives before the update.
pub fn manydg_train_step(model: &mut ManyDgModel, batch: &PairedBatch, opt: &mut Adam) -> Result<LossBreakdown> {
    let (grads, breakdown) = {
        let tape = Tape::new();
        let p = model.params.bind(&tape);
        let (total, parts) = model.objective(&p, batch)?;
        let breakdown = parts.breakdown(total)?;
        (p.collect_grads(&total.backward()?), breakdown)
    };
    opt.step(&mut model.params, &grads)?;
    Ok(breakdown)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub backbone_widths: Vec<usize>,
}

impl BaseConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            num_classes,
            backbone_widths: vec![hidden_dim, hidden_dim],
        }
    }
}

/// ERM baseline: the same backbone followed by a one-hidden-layer prediction head.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseModel {
    config: BaseConfig,
    params: ParamSet,
    backbone: Backbone,
    hidden: Linear,
    out: Linear,
}

impl BaseModel {
    pub fn new(config: BaseConfig, seed: u64) -> Result<Self> {
        if config.num_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {}", config.num_classes)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let backbone = Backbone::new(&mut params, "backbone", config.input_dim, &config.backbone_widths, &mut rng)?;
        let d = backbone.output_dim();
        let hidden = Linear::new(&mut params, "head.0", d, config.hidden_dim, true, &mut rng)?;
        let out = Linear::new(&mut params, "head.1", config.hidden_dim, config.num_classes, true, &mut rng)?;
        Ok(Self {
            config,
            params,
            backbone,
            hidden,
            out,
        })
    }

    pub fn config(&self) -> &BaseConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn features<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        self.backbone.forward(p, x)
    }

    pub fn log_probs<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        let v = self.features(p, x)?;
        let h = self.hidden.forward(p, v)?.relu()?;
        self.out.forward(p, h)?.log_softmax_rows()
    }

    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        Ok(self.log_probs(&p, tape.constant(x.clone()))?.value().map(f64::exp))
    }

    /// Backbone features `v`.
    pub fn embed(&self, x: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        Ok((*self.features(&p, tape.constant(x.clone()))?.value()).clone())
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let meta = serde_json::json!({ "kind": "base", "config": serde_json::to_value(&self.config)? });
        Ok(Checkpoint::from_params(meta, &self.params))
    }
}

/// One cross-entropy update; returns the loss before the update.
pub fn base_train_step(model: &mut BaseModel, batch: &Batch, opt: &mut Adam) -> Result<f64> {
    let (grads, loss) = {
        let tape = Tape::new();
        let p = model.params.bind(&tape);
        let lp = model.log_probs(&p, tape.constant(batch.x.clone()))?;
        let loss = loss_sup(lp, &batch.labels)?;
        (p.collect_grads(&loss.backward()?), loss.item()?)
    };
    opt.step(&mut model.params, &grads)?;
    Ok(loss)
}

/// Either trained model, as stored in a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Base(BaseModel),
    ManyDg(ManyDgModel),
}

impl AnyModel {
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            AnyModel::Base(m) => m.predict(x),
            AnyModel::ManyDg(m) => m.predict(x),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            AnyModel::Base(m) => m.config.num_classes,
            AnyModel::ManyDg(m) => m.config.num_classes,
        }
    }

    pub fn params(&self) -> &ParamSet {
        match self {
            AnyModel::Base(m) => &m.params,
            AnyModel::ManyDg(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            AnyModel::Base(m) => &mut m.params,
            AnyModel::ManyDg(m) => &mut m.params,
        }
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        match self {
            AnyModel::Base(m) => m.to_checkpoint(),
            AnyModel::ManyDg(m) => m.to_checkpoint(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let kind = ck.meta.get("kind").and_then(|k| k.as_str()).unwrap_or_default();
        let cfg = ck
            .meta
            .get("config")
            .cloned()
            .ok_or_else(|| Error::Format("checkpoint meta lacks a model config".into()))?;
        let mut model = match kind {
            "base" => AnyModel::Base(BaseModel::new(serde_json::from_value(cfg)?, 0)?),
            "manydg" => AnyModel::ManyDg(ManyDgModel::new(serde_json::from_value(cfg)?, 0)?),
            other => return Err(Error::Format(format!("unknown model kind {other:?}"))),
        };
        ck.load_into(model.params_mut())?;
        Ok(model)
    }
}
