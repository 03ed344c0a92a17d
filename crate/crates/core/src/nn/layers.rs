use rand::Rng;

use super::params::{init_uniform, Bound, ParamId, ParamSet};
use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

/// Fully connected layer computing `x·Wᵀ + b` with `W: [out×in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = params.add(format!("{name}.weight"), init_uniform(&[out_dim, in_dim], in_dim, rng)?);
        let bias = if bias {
            Some(params.add(format!("{name}.bias"), init_uniform(&[out_dim], in_dim, rng)?))
        } else {
            None
        };
        Ok(Self {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        let cols = x.value().cols();
        if cols != self.in_dim {
            return Err(Error::dim("linear", format!("expected {} inputs, got {cols}", self.in_dim)));
        }
        let y = x.matmul_nt(p.var(self.weight))?;
        match self.bias {
            Some(b) => y.add_row(p.var(b)),
            None => Ok(y),
        }
    }
}

/// Three linear layers with ReLU between layers 1–2 and 2–3.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp3 {
    pub layers: [Linear; 3],
}

impl Mlp3 {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            layers: [
                Linear::new(params, &format!("{name}.0"), in_dim, hidden, true, rng)?,
                Linear::new(params, &format!("{name}.1"), hidden, hidden, true, rng)?,
                Linear::new(params, &format!("{name}.2"), hidden, out_dim, true, rng)?,
            ],
        })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[2].out_dim
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        let h = self.layers[0].forward(p, x)?.relu()?;
        let h = self.layers[1].forward(p, h)?.relu()?;
        self.layers[2].forward(p, h)
    }
}

/// Feature extractor `h_θ`: flattened pixels through a ReLU MLP stack to `d` features.
///
/// `widths` lists every layer output, so `[d, d]` is flatten → d → d.
#[derive(Clone, Debug, PartialEq)]
pub struct Backbone {
    pub layers: Vec<Linear>,
}

impl Backbone {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        input_dim: usize,
        widths: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::Config("backbone needs at least one layer".into()));
        }
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input_dim;
        for (i, &w) in widths.iter().enumerate() {
            layers.push(Linear::new(params, &format!("{name}.{i}"), prev, w, true, rng)?);
            prev = w;
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(p, h)?;
            if i + 1 < self.layers.len() {
                h = h.relu()?;
            }
        }
        Ok(h)
    }
}

/// Bias-free prototype classifier: row `k` of the matrix is the class prototype `w_k`
/// and the logits are `⟨w_k, v⟩ / τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeHead {
    pub prototypes: ParamId,
    pub num_classes: usize,
    pub dim: usize,
    pub temperature: f64,
}

impl PrototypeHead {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        num_classes: usize,
        dim: usize,
        temperature: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {num_classes}")));
        }
        check_temperature(temperature)?;
        let prototypes = params.add(format!("{name}.prototypes"), init_uniform(&[num_classes, dim], dim, rng)?);
        Ok(Self {
            prototypes,
            num_classes,
            dim,
            temperature,
        })
    }

    pub fn logits<'t>(&self, p: &Bound<'t>, v: Var<'t>) -> Result<Var<'t>> {
        check_temperature(self.temperature)?;
        v.matmul_nt(p.var(self.prototypes))?.scale(1.0 / self.temperature)
    }

    pub fn log_probs<'t>(&self, p: &Bound<'t>, v: Var<'t>) -> Result<Var<'t>> {
        self.logits(p, v)?.log_softmax_rows()
    }
}

fn check_temperature(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("temperature must be positive, got {tau}")))
    }
}

/// `softmax(v·Wᵀ/τ)` for a prototype matrix `W: [K×d]` and features `v: [batch×d]`.
pub fn prototype_probs(prototypes: &Tensor, v: &Tensor, temperature: f64) -> Result<Tensor> {
    check_temperature(temperature)?;
    let tape = Tape::new();
    let w = tape.constant(prototypes.clone());
    let v = tape.constant(v.clone());
    let lp = v.matmul_nt(w)?.scale(1.0 / temperature)?.log_softmax_rows()?;
    Ok(lp.value().map(f64::exp))
}
