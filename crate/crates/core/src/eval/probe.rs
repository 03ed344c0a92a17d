use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub steps: usize,
    pub lr: f64,
    /// Standard deviations below this are treated as constant columns.
    pub std_eps: f64,
    /// Rows beyond this are subsampled (seeded) before fitting.
    pub max_samples: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            lr: 0.1,
            std_eps: 1e-8,
            max_samples: 2000,
            seed: 0,
        }
    }
}

/// Column means and standard deviations; constant columns get std 0 and map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Tensor, eps: f64) -> Self {
        let (n, d) = x.dims2();
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd < eps {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let (n, d) = x.dims2();
        if d != self.mean.len() {
            return Err(Error::dim("standardize", format!("{d} columns, fitted on {}", self.mean.len())));
        }
        let mut out = Vec::with_capacity(n * d);
        for i in 0..n {
            for ((v, m), s) in x.row(i).iter().zip(&self.mean).zip(&self.std) {
                out.push(if *s == 0.0 { 0.0 } else { (v - m) / s });
            }
        }
        Tensor::matrix(n, d, out)
    }
}

/// Multinomial logistic regression on standardized inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProbe {
    /// Distinct target values; row `c` of `weights` scores `classes[c]`.
    pub classes: Vec<usize>,
    /// `[C × d]`
    pub weights: Tensor,
    pub bias: Vec<f64>,
    pub standardizer: Standardizer,
}

impl LinearProbe {
    fn scores(&self, xs: &Tensor) -> Result<Tensor> {
        let (n, c) = (xs.rows(), self.classes.len());
        let mut s = xs.matmul(&self.weights.transpose())?;
        for i in 0..n {
            for (v, b) in s.data_mut()[i * c..(i + 1) * c].iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(s)
    }

    /// Predicted target values.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        let s = self.scores(&self.standardizer.apply(x)?)?;
        Ok(s.argmax_rows().into_iter().map(|c| self.classes[c]).collect())
    }

    pub fn accuracy(&self, x: &Tensor, targets: &[usize]) -> Result<f64> {
        let p = self.predict(x)?;
        Ok(p.iter().zip(targets).filter(|(a, b)| a == b).count() as f64 / targets.len().max(1) as f64)
    }
}

/// Full-batch gradient descent from zero weights for a fixed number of steps.
pub fn fit_linear_probe(x: &Tensor, targets: &[usize], config: &ProbeConfig) -> Result<LinearProbe> {
    let (n, d) = x.dims2();
    if targets.len() != n {
        return Err(Error::dim("fit_linear_probe", format!("{n} rows, {} targets", targets.len())));
    }
    let mut classes = targets.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Usage("linear probe needs at least two target classes".into()));
    }
    let rows: Vec<usize> = if n > config.max_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut r = index::sample(&mut rng, n, config.max_samples).into_vec();
        r.sort_unstable();
        r
    } else {
        (0..n).collect()
    };
    let x = x.select_rows(&rows)?;
    let y: Vec<usize> = rows.iter().map(|&i| classes.binary_search(&targets[i]).unwrap_or(0)).collect();
    let m = rows.len();
    let c = classes.len();

    let standardizer = Standardizer::fit(&x, config.std_eps);
    let xs = standardizer.apply(&x)?;
    let mut probe = LinearProbe {
        classes,
        weights: Tensor::zeros(&[c, d]),
        bias: vec![0.0; c],
        standardizer,
    };
    for _ in 0..config.steps {
        let mut delta = probe.scores(&xs)?.softmax_rows();
        for (i, &t) in y.iter().enumerate() {
            delta.data_mut()[i * c + t] -= 1.0;
        }
        let gw = delta.transpose().matmul(&xs)?;
        let step = config.lr / m as f64;
        for (w, g) in probe.weights.data_mut().iter_mut().zip(gw.data()) {
            *w -= step * g;
        }
        for (k, b) in probe.bias.iter_mut().enumerate() {
            let g: f64 = (0..m).map(|i| delta.data()[i * c + k]).sum();
            *b -= step * g;
        }
    }
    Ok(probe)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Mean cosine between row `k` of `a` and row `k` of `b`.
pub fn matched_cosine(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dim("matched_cosine", format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let r = a.rows();
    Ok((0..r).map(|k| cosine(a.row(k), b.row(k))).sum::<f64>() / r as f64)
}

/// Mean cosine over every (row of `a`, row of `b`) pair.
pub fn all_pairs_cosine(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(Error::dim("all_pairs_cosine", format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let mut sum = 0.0;
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            sum += cosine(a.row(i), b.row(j));
        }
    }
    Ok(sum / (a.rows() * b.rows()) as f64)
}
