use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dump::{DumpRow, EmbeddingDump};
use super::probe::{all_pairs_cosine, fit_linear_probe, matched_cosine, ProbeConfig};
use crate::data::Split;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean cosine similarities between linear-probe weight sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `v → labels` vs `v_perp → labels`
    pub v_perp_labels: f64,
    /// `v → domains` vs `v_par → domains`
    pub v_par_domains: f64,
    /// `v → labels` vs `v → domains`, all class pairs
    pub labels_vs_domains: f64,
    /// `v → labels` vs `v_par → labels`
    pub v_par_labels: f64,
}

impl ProbeReport {
    pub fn rows(&self) -> [(&'static str, f64); 4] {
        [
            ("v->labels vs v_perp->labels", self.v_perp_labels),
            ("v->domains vs v_par->domains", self.v_par_domains),
            ("v->labels vs v->domains", self.labels_vs_domains),
            ("v->labels vs v_par->labels", self.v_par_labels),
        ]
    }
}

fn block_matrix(rows: &[DumpRow], dim: usize, pick: impl Fn(&DumpRow) -> &Vec<f64>) -> Result<Tensor> {
    Tensor::matrix(rows.len(), dim, rows.iter().flat_map(|r| pick(r).iter().copied()).collect())
}

/// Fits the probes on the dump's training rows and compares their weights.
pub fn weight_cosine_report(dump: &EmbeddingDump, config: &ProbeConfig) -> Result<ProbeReport> {
    let train = dump.filter_split(Split::Train);
    let rows = train.rows();
    let d = dump.dim();
    let labels: Vec<usize> = rows.iter().map(|r| r.label).collect();
    let domains: Vec<usize> = rows.iter().map(|r| r.domain as usize).collect();
    let mut distinct = domains.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Usage(format!(
            "probe report needs training rows from at least 2 domains, found {}",
            distinct.len()
        )));
    }
    let v = block_matrix(rows, d, |r| &r.v)?;
    let v_par = block_matrix(rows, d, |r| &r.v_par)?;
    let v_perp = block_matrix(rows, d, |r| &r.v_perp)?;

    let v_lab = fit_linear_probe(&v, &labels, config)?.weights;
    let perp_lab = fit_linear_probe(&v_perp, &labels, config)?.weights;
    let par_lab = fit_linear_probe(&v_par, &labels, config)?.weights;
    let v_dom = fit_linear_probe(&v, &domains, config)?.weights;
    let par_dom = fit_linear_probe(&v_par, &domains, config)?.weights;
    Ok(ProbeReport {
        v_perp_labels: matched_cosine(&v_lab, &perp_lab)?,
        v_par_domains: matched_cosine(&v_dom, &par_dom)?,
        labels_vs_domains: all_pairs_cosine(&v_lab, &v_dom)?,
        v_par_labels: matched_cosine(&v_lab, &par_lab)?,
    })
}

/// Mean pairwise cosine of `z` within and across domains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZSimilarity {
    pub within: f64,
    pub cross: f64,
    pub within_pairs: usize,
    pub cross_pairs: usize,
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// All pairs when there are at most `cap` of a kind, otherwise `cap` seeded random pairs of that kind.
pub fn z_similarity(dump: &EmbeddingDump, cap: usize, seed: u64) -> Result<ZSimilarity> {
    let rows = dump.rows();
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        groups.entry(r.domain).or_default().push(i);
    }
    let n = rows.len();
    let within_total: usize = groups.values().map(|g| g.len() * (g.len().saturating_sub(1)) / 2).sum();
    let cross_total = n * n.saturating_sub(1) / 2 - within_total;
    if groups.len() < 2 || within_total == 0 {
        return Err(Error::Usage(
            "z similarity needs at least 2 domains and one domain with 2 samples".into(),
        ));
    }
    let z = |i: usize| rows[i].z.as_slice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let within = if within_total <= cap {
        let mut s = 0.0;
        for g in groups.values() {
            for (a, &i) in g.iter().enumerate() {
                for &j in &g[a + 1..] {
                    s += cos(z(i), z(j));
                }
            }
        }
        (s / within_total as f64, within_total)
    } else {
        let weights: Vec<(usize, &Vec<usize>)> =
            groups.values().map(|g| (g.len() * (g.len().saturating_sub(1)) / 2, g)).collect();
        let mut s = 0.0;
        for _ in 0..cap {
            let mut pick = rng.gen_range(0..within_total);
            let g = weights
                .iter()
                .find(|(w, _)| {
                    if pick < *w {
                        true
                    } else {
                        pick -= w;
                        false
                    }
                })
                .map(|(_, g)| *g)
                .expect("pick is below the total pair count");
            let a = rng.gen_range(0..g.len());
            let mut b = rng.gen_range(0..g.len() - 1);
            if b >= a {
                b += 1;
            }
            s += cos(z(g[a]), z(g[b]));
        }
        (s / cap as f64, cap)
    };

    let cross = if cross_total <= cap {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                if rows[i].domain != rows[j].domain {
                    s += cos(z(i), z(j));
                }
            }
        }
        (s / cross_total as f64, cross_total)
    } else {
        let mut s = 0.0;
        let mut taken = 0;
        while taken < cap {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if rows[i].domain != rows[j].domain {
                s += cos(z(i), z(j));
                taken += 1;
            }
        }
        (s / cap as f64, cap)
    };
    Ok(ZSimilarity {
        within: within.0,
        cross: cross.0,
        within_pairs: within.1,
        cross_pairs: cross.1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub id: usize,
    pub split: Split,
    pub perp_norm: f64,
    pub par_norm: f64,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(‖v_perp‖, ‖v_par‖)` per sample.
pub fn norm_scatter(dump: &EmbeddingDump) -> Vec<NormRow> {
    dump.rows()
        .iter()
        .map(|r| NormRow {
            id: r.id,
            split: r.split,
            perp_norm: l2(&r.v_perp),
            par_norm: l2(&r.v_par),
        })
        .collect()
}

/// CSV with header `id,split,perp_norm,par_norm`.
pub fn write_norm_scatter<W: Write>(rows: &[NormRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| Error::io("<norm scatter>", e))
}
