use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::{
    ensure_dir, write_csv, write_json, ContinualReport, ContinualRow, MetricsReport, ProbeRow, SweepReport, SweepRow,
};
use super::train::{build_model, evaluate, prepare_data, train_epoch, train_one, Datasets};
use crate::data::{continual_splits, limit_domains, DomainDataset};
use crate::error::{Error, Result};
use crate::eval::{
    norm_scatter, weight_cosine_report, write_norm_scatter, z_similarity, DumpRow, EmbeddingDump, ProbeConfig,
    ProbeReport, ZSimilarity,
};
use crate::method::AnyModel;
use crate::nn::{Adam, Checkpoint};

/// Trains every configured seed on prepared data; nothing is written.
pub fn run_on(cfg: &ExperimentConfig, data: &Datasets) -> Result<(MetricsReport, Vec<AnyModel>)> {
    cfg.validate()?;
    let mut runs = Vec::new();
    let mut models = Vec::new();
    for seed in cfg.seeds() {
        let (run, model) = train_one(cfg, data, seed)?;
        runs.push(run);
        models.push(model);
    }
    Ok((MetricsReport::new(cfg.clone(), runs), models))
}

/// `metrics.csv`, `curve.csv`, `summary.json` and, if enabled, one checkpoint per seed.
pub fn write_report(report: &MetricsReport, models: &[AnyModel], dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_csv(&dir.join("metrics.csv"), &report.rows())?;
    write_csv(&dir.join("curve.csv"), &report.curve())?;
    write_json(&dir.join("summary.json"), report)?;
    if report.config.save_checkpoint {
        for (run, model) in report.runs.iter().zip(models) {
            model.to_checkpoint()?.save(&dir.join(format!("checkpoint_seed{}.json", run.seed)))?;
        }
    }
    Ok(())
}

/// Builds the data, trains each seed and writes reports under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let data = prepare_data(cfg)?;
    let (report, models) = run_on(cfg, &data)?;
    write_report(&report, &models, &cfg.out_dir)?;
    Ok(report)
}

/// Full, half and a tenth of the available training domains.
pub fn default_sweep_counts(available: usize) -> Vec<usize> {
    let mut c = vec![available, available / 2, available / 10];
    c.retain(|&n| n > 0);
    c.dedup();
    c
}

/// One run per domain count, always scored on the same test split.
pub fn run_small_data_sweep(cfg: &ExperimentConfig, counts: &[usize]) -> Result<SweepReport> {
    let data = prepare_data(cfg)?;
    let available = data.train.num_domains();
    let counts = if counts.is_empty() { default_sweep_counts(available) } else { counts.to_vec() };
    if counts.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Config(format!("sweep counts must be descending, got {counts:?}")));
    }
    if let Some(&c) = counts.iter().find(|&&c| c == 0 || c > available) {
        return Err(Error::Config(format!("sweep count {c} infeasible with {available} training domains")));
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &count in &counts {
        let limited = Datasets {
            train: limit_domains(&data.train, count, cfg.data_seed)?,
            ..data.clone()
        };
        let mut sub = cfg.clone();
        sub.out_dir = cfg.out_dir.join(format!("domains_{count}"));
        let (report, models) = run_on(&sub, &limited)?;
        write_report(&report, &models, &sub.out_dir)?;
        rows.push(SweepRow {
            domains: count,
            train_samples: limited.train.len(),
            test_accuracy_mean: report.test.accuracy.mean,
            test_accuracy_std: report.test.accuracy.std,
            test_kappa_mean: report.test.kappa.mean,
            test_macro_f1_mean: report.test.macro_f1.mean,
        });
        reports.push(report);
    }
    let sweep = SweepReport {
        config: cfg.clone(),
        rows,
        reports,
    };
    ensure_dir(&cfg.out_dir)?;
    write_csv(&cfg.out_dir.join("sweep.csv"), &sweep.rows)?;
    write_json(&cfg.out_dir.join("sweep_summary.json"), &sweep)?;
    Ok(sweep)
}

/// Pretraining on the first domains, then fine-tuning on each later step of the schedule;
/// the test split is scored after pretraining and after every step.
pub fn run_continual(cfg: &ExperimentConfig) -> Result<ContinualReport> {
    let data = prepare_data(cfg)?;
    let schedule = continual_splits(
        &data.train,
        cfg.continual_pretrain,
        cfg.continual_step,
        cfg.continual_steps,
        cfg.continual_replay,
        cfg.data_seed,
    )?;
    let mut rows = Vec::new();
    for seed in cfg.seeds() {
        let mut model = build_model(cfg, data.train.feature_dim(), data.num_classes, seed)?;
        let mut opt = Adam::new(cfg.lr, cfg.weight_decay);
        for (step, set) in schedule.iter().enumerate() {
            let epochs = if step == 0 { cfg.epochs } else { cfg.continual_epochs };
            for e in 0..epochs {
                let s = seed.wrapping_mul(7919).wrapping_add((step * 1000 + e) as u64);
                train_epoch(&mut model, set, cfg.batch_size, &mut opt, s)?;
            }
            let m = evaluate(&model, &data.test)?;
            log::info!("continual seed {seed} step {step}: test acc {:.4}", m.accuracy);
            rows.push(ContinualRow {
                seed,
                step,
                domains_seen: cfg.continual_pretrain + step * cfg.continual_step,
                train_samples: set.len(),
                test_accuracy: m.accuracy,
                test_kappa: m.kappa,
                test_macro_f1: m.macro_f1,
            });
        }
    }
    let report = ContinualReport {
        config: cfg.clone(),
        rows,
    };
    ensure_dir(&cfg.out_dir)?;
    write_csv(&cfg.out_dir.join("continual.csv"), &report.rows)?;
    write_json(&cfg.out_dir.join("continual_summary.json"), &report)?;
    Ok(report)
}

const EMBED_CHUNK: usize = 512;

/// Embeddings of every train, val and test sample; ids run across the three splits.
pub fn embed_datasets(model: &AnyModel, sets: &[&DomainDataset]) -> Result<EmbeddingDump> {
    let AnyModel::ManyDg(m) = model else {
        return Err(Error::Usage("embedding export needs a manydg checkpoint".into()));
    };
    let mut dump = EmbeddingDump::new(m.config().hidden_dim);
    let mut id = 0;
    for set in sets {
        let all: Vec<usize> = (0..set.len()).collect();
        for chunk in all.chunks(EMBED_CHUNK) {
            let e = m.embed(&set.feature_matrix(chunk)?)?;
            for (r, &i) in chunk.iter().enumerate() {
                dump.push(DumpRow {
                    id,
                    domain: set.domain(i),
                    label: set.label(i).majority(),
                    split: set.split(),
                    v: e.v.row(r).to_vec(),
                    z: e.z.row(r).to_vec(),
                    v_par: e.v_par.row(r).to_vec(),
                    v_perp: e.v_perp.row(r).to_vec(),
                })?;
                id += 1;
            }
        }
    }
    Ok(dump)
}

/// Loads a checkpoint, rebuilds the configured data and writes the dump to `out`.
pub fn export_embeddings(cfg: &ExperimentConfig, checkpoint: &Path, out: &Path) -> Result<EmbeddingDump> {
    let model = AnyModel::from_checkpoint(&Checkpoint::load(checkpoint)?)?;
    let data = prepare_data(cfg)?;
    let dump = embed_datasets(&model, &[&data.train, &data.val, &data.test])?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    dump.save(out)?;
    Ok(dump)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub probe: ProbeReport,
    pub z_similarity: ZSimilarity,
    pub samples: usize,
}

pub const Z_PAIR_CAP: usize = 20_000;

/// Weight-cosine rows, z similarity and the norm scatter of a dump.
pub fn analyze_dump(dump: &EmbeddingDump, probe: &ProbeConfig) -> Result<ProbeSummary> {
    Ok(ProbeSummary {
        probe: weight_cosine_report(dump, probe)?,
        z_similarity: z_similarity(dump, Z_PAIR_CAP, probe.seed)?,
        samples: dump.len(),
    })
}

/// Writes `probe_report.csv`, `z_similarity.csv`, `norm_scatter.csv` and `probe_summary.json` to `dir`.
pub fn probe_report(dump: &EmbeddingDump, probe: &ProbeConfig, dir: &Path) -> Result<ProbeSummary> {
    let summary = analyze_dump(dump, probe)?;
    ensure_dir(dir)?;
    let rows: Vec<ProbeRow> = summary
        .probe
        .rows()
        .iter()
        .map(|(name, v)| ProbeRow {
            comparison: name.to_string(),
            mean_cosine: *v,
        })
        .collect();
    write_csv(&dir.join("probe_report.csv"), &rows)?;
    write_csv(&dir.join("z_similarity.csv"), &[summary.z_similarity])?;
    let path = dir.join("norm_scatter.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_norm_scatter(&norm_scatter(dump), std::io::BufWriter::new(file))?;
    write_json(&dir.join("probe_summary.json"), &summary)?;
    Ok(summary)
}
