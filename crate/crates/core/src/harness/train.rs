use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ModelKind};
use super::report::{EpochRecord, RunResult};
use crate::data::{
    apply_scenario, build_double_loader, generate_digits, limit_domains, load_idx, make_noise_bank, split_validation,
    DomainDataset, Split,
};
use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, Metrics};
use crate::method::{
    base_train_step, manydg_train_step, AnyModel, BaseConfig, BaseModel, LossBreakdown, ManyDgConfig, ManyDgModel,
    PairedBatch,
};
use crate::nn::Adam;

const EVAL_CHUNK: usize = 512;

/// Train, validation and test sets of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Datasets {
    pub train: DomainDataset,
    pub val: DomainDataset,
    pub test: DomainDataset,
    pub num_classes: usize,
}

/// Builds (or loads) the digits, applies the scenario and carves out validation data.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<Datasets> {
    cfg.validate()?;
    let (train, test) = match (&cfg.train_images, &cfg.train_labels, &cfg.test_images, &cfg.test_labels) {
        (Some(ti), Some(tl), Some(si), Some(sl)) => (load_idx(ti, tl, Split::Train)?, load_idx(si, sl, Split::Test)?),
        _ => (
            generate_digits(cfg.train_size, Split::Train, cfg.data_seed)?,
            generate_digits(cfg.test_size, Split::Test, cfg.data_seed.wrapping_add(0x5eed))?,
        ),
    };
    if (train.height(), train.width()) != (test.height(), test.width()) {
        return Err(Error::Consistency("train and test images differ in size".into()));
    }
    let num_classes = train.num_classes().max(test.num_classes());
    let bank = make_noise_bank(train.height(), train.width(), cfg.num_waves, cfg.alpha, cfg.data_seed)?;
    let train = apply_scenario(&train, cfg.scenario, &bank, cfg.data_seed)?;
    let test = apply_scenario(&test, cfg.scenario, &bank, cfg.data_seed)?;
    let (mut train, val) = split_validation(&train, cfg.val_fraction, cfg.data_seed)?;
    if let Some(n) = cfg.domain_limit {
        train = limit_domains(&train, n, cfg.data_seed)?;
    }
    Ok(Datasets {
        train,
        val,
        test,
        num_classes,
    })
}

pub fn build_model(cfg: &ExperimentConfig, input_dim: usize, num_classes: usize, seed: u64) -> Result<AnyModel> {
    let widths = vec![cfg.backbone_width, cfg.hidden_dim];
    Ok(match cfg.model {
        ModelKind::Base => {
            let mut c = BaseConfig::new(input_dim, cfg.hidden_dim, num_classes);
            c.backbone_widths = widths;
            AnyModel::Base(BaseModel::new(c, seed)?)
        }
        ModelKind::ManyDg => {
            let mut c = ManyDgConfig::new(input_dim, cfg.hidden_dim, num_classes);
            c.backbone_widths = widths;
            c.temperature = cfg.temperature;
            c.weights = cfg.weights();
            AnyModel::ManyDg(ManyDgModel::new(c, seed)?)
        }
    })
}

pub fn confusion(model: &AnyModel, data: &DomainDataset) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(model.num_classes());
    let all: Vec<usize> = (0..data.len()).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let pred = model.predict(&data.feature_matrix(chunk)?)?.argmax_rows();
        for (&i, p) in chunk.iter().zip(pred) {
            cm.record(data.label(i).majority(), p)?;
        }
    }
    Ok(cm)
}

pub fn evaluate(model: &AnyModel, data: &DomainDataset) -> Result<Metrics> {
    Metrics::from_confusion(&confusion(model, data)?)
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(epoch as u64)
}

/// One pass over `train`; returns the mean objectives over its steps.
pub fn train_epoch(
    model: &mut AnyModel,
    train: &DomainDataset,
    batch_size: usize,
    opt: &mut Adam,
    seed: u64,
) -> Result<LossBreakdown> {
    let mut sum = LossBreakdown::default();
    let mut steps = 0usize;
    match model {
        AnyModel::Base(m) => {
            let mut order: Vec<usize> = (0..train.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            for chunk in order.chunks(batch_size) {
                let loss = base_train_step(m, &train.batch(chunk)?, opt)?;
                sum.sup += loss;
                sum.total += loss;
                steps += 1;
            }
        }
        AnyModel::ManyDg(m) => {
            let pairing = build_double_loader(train, batch_size, seed)?;
            for (a, b) in pairing.batches() {
                let batch = PairedBatch::new(train.batch(a)?, train.batch(b)?)?;
                let l = manydg_train_step(m, &batch, opt)?;
                sum.sup += l.sup;
                sum.mmd += l.mmd;
                sum.rec += l.rec;
                sum.sim += l.sim;
                sum.total += l.total;
                steps += 1;
            }
        }
    }
    let n = steps.max(1) as f64;
    Ok(LossBreakdown {
        sup: sum.sup / n,
        mmd: sum.mmd / n,
        rec: sum.rec / n,
        sim: sum.sim / n,
        total: sum.total / n,
    })
}

/// Trains one seed, keeps the epoch with the best validation accuracy
/// (the last one when there is no validation data) and scores it on test.
pub fn train_one(cfg: &ExperimentConfig, data: &Datasets, seed: u64) -> Result<(RunResult, AnyModel)> {
    let mut model = build_model(cfg, data.train.feature_dim(), data.num_classes, seed)?;
    let mut opt = Adam::new(cfg.lr, cfg.weight_decay);
    let mut best: Option<(f64, usize, AnyModel)> = None;
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let loss = train_epoch(&mut model, &data.train, cfg.batch_size, &mut opt, epoch_seed(seed, epoch))?;
        let val_acc = if data.val.is_empty() { None } else { Some(evaluate(&model, &data.val)?.accuracy) };
        let shown = val_acc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"));
        log::info!("{} seed {seed} epoch {}: loss {:.4} val acc {shown}", cfg.model, epoch + 1, loss.total);
        curve.push(EpochRecord::new(seed, epoch + 1, loss, val_acc));
        let better = match (&best, val_acc) {
            (None, _) | (Some(_), None) => true,
            (Some((acc, _, _)), Some(v)) => v > *acc,
        };
        if better {
            best = Some((val_acc.unwrap_or(0.0), epoch + 1, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.ok_or_else(|| Error::Config("epochs must be positive".into()))?;
    let val = if data.val.is_empty() { Metrics::default() } else { evaluate(&model, &data.val)? };
    let test = evaluate(&model, &data.test)?;
    Ok((
        RunResult {
            seed,
            best_epoch,
            val,
            test,
            curve,
        },
        model,
    ))
}
