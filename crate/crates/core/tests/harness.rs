use std::fs;
use std::path::PathBuf;

use manydg::data::{read_domain_ids, write_domain_ids, write_idx, ShiftScenario, Split};
use manydg::eval::{EmbeddingDump, ProbeConfig};
use manydg::harness::{
    export_embeddings, prepare_data, probe_report, read_csv, read_json, run_continual, run_experiment, run_on,
    run_small_data_sweep, ContinualRow, ExperimentConfig, MetricsReport, MetricsRow, ModelKind, ProbeRow, SweepRow,
};
use manydg::Error;

fn tiny(out: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        epochs: 1,
        batch_size: 16,
        hidden_dim: 6,
        backbone_width: 12,
        train_size: 240,
        test_size: 80,
        num_waves: 6,
        out_dir: out,
        ..ExperimentConfig::default()
    }
}

#[test]
fn config_defaults() {
    let c = ExperimentConfig::default();
    assert_eq!(c.scenario, ShiftScenario::Original);
    assert_eq!(c.model, ModelKind::ManyDg);
    assert_eq!((c.hidden_dim, c.temperature, c.lr, c.weight_decay), (64, 0.5, 5e-4, 1e-5));
    assert_eq!((c.train_size, c.test_size, c.alpha), (10_000, 2_000, 0.5));
    c.validate().unwrap();
}

#[test]
fn config_key_value_round_trip() {
    let text = "\
# stepped run
scenario = opposite_stepped
model = base
epochs = 3   # short
lambda_sim = 2.5
domain_limit = 7
sweep_counts = 20, 10,5
train_images = /tmp/a.idx
save_checkpoint = false
";
    let err = ExperimentConfig::from_kv_str(text).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "a lone IDX path is rejected: {err}");

    let c = ExperimentConfig::from_kv_str(&text.replace("train_images = /tmp/a.idx\n", "")).unwrap();
    assert_eq!(c.scenario, ShiftScenario::OppositeStepped);
    assert_eq!(c.model, ModelKind::Base);
    assert_eq!(c.epochs, 3);
    assert_eq!(c.lambda_sim, 2.5);
    assert_eq!(c.domain_limit, Some(7));
    assert_eq!(c.sweep_counts, vec![20, 10, 5]);
    assert!(!c.save_checkpoint);

    let back = ExperimentConfig::from_kv_str(&c.to_kv_string()).unwrap();
    assert_eq!(back, c);
    let mut none = c.clone();
    none.set("domain_limit", "none").unwrap();
    assert_eq!(none.domain_limit, None);
}

#[test]
fn config_errors() {
    for bad in ["bogus = 1", "epochs = -1", "epochs = x", "lr = 0", "alpha = 1.5", "scenario = sideways", "epochs"] {
        let err = ExperimentConfig::from_kv_str(bad).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{bad}: {err}");
    }
    let dir = tempfile::tempdir().unwrap();
    let err = ExperimentConfig::load(&dir.path().join("missing.cfg")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn run_is_deterministic_and_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path().join("a"));
    cfg.scenario = ShiftScenario::HalfAll;
    cfg.num_seeds = 2;
    let a = run_experiment(&cfg).unwrap();
    let data = prepare_data(&cfg).unwrap();
    let (b, _) = run_on(&cfg, &data).unwrap();
    assert_eq!(a, b);

    let rows: Vec<MetricsRow> = read_csv(&cfg.out_dir.join("metrics.csv")).unwrap();
    assert_eq!(rows, a.rows());
    let summary: MetricsReport = read_json(&cfg.out_dir.join("summary.json")).unwrap();
    assert_eq!(summary, a);
    assert_eq!(summary.config, cfg);
    for s in [0, 1] {
        assert!(cfg.out_dir.join(format!("checkpoint_seed{s}.json")).exists());
    }
    let curve = fs::read_to_string(cfg.out_dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 2 * cfg.epochs);
}

#[test]
fn idx_source_matches_synthetic_source() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path().join("syn"));
    let syn = prepare_data(&ExperimentConfig {
        scenario: ShiftScenario::Original,
        val_fraction: 0.0,
        ..cfg.clone()
    })
    .unwrap();
    let p = |n: &str| dir.path().join(n);
    write_idx(&syn.train, &p("tr-img"), &p("tr-lbl")).unwrap();
    write_idx(&syn.test, &p("te-img"), &p("te-lbl")).unwrap();
    write_domain_ids(&syn.train, &p("tr-dom")).unwrap();
    assert_eq!(read_domain_ids(&p("tr-dom")).unwrap(), syn.train.domains());

    let idx_cfg = ExperimentConfig {
        train_images: Some(p("tr-img")),
        train_labels: Some(p("tr-lbl")),
        test_images: Some(p("te-img")),
        test_labels: Some(p("te-lbl")),
        ..cfg
    };
    let idx = prepare_data(&idx_cfg).unwrap();
    assert_eq!(idx.train.len() + idx.val.len(), syn.train.len());
    assert_eq!(idx.test.majority_labels(), syn.test.majority_labels());
    let max_diff = idx
        .test
        .pixels()
        .iter()
        .zip(syn.test.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max_diff <= 0.5 / 255.0 + 1e-12, "{max_diff}");
}

#[test]
fn export_and_probe_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path().join("run"));
    cfg.scenario = ShiftScenario::AllShift;
    run_experiment(&cfg).unwrap();
    let ckpt = cfg.out_dir.join("checkpoint_seed0.json");
    let out = dir.path().join("emb/dump.csv");
    let dump = export_embeddings(&cfg, &ckpt, &out).unwrap();
    let data = prepare_data(&cfg).unwrap();
    assert_eq!(dump.len(), data.train.len() + data.val.len() + data.test.len());
    assert_eq!(dump.filter_split(Split::Val).len(), data.val.len());
    for r in dump.rows() {
        let (par, perp): (f64, f64) = (r.v_par.iter().map(|x| x * x).sum(), r.v_perp.iter().map(|x| x * x).sum());
        let v: f64 = r.v.iter().map(|x| x * x).sum();
        assert!((par + perp - v).abs() <= 1e-9 * v.max(1.0));
    }
    assert_eq!(EmbeddingDump::load(&out).unwrap(), dump);

    let again = dir.path().join("again.csv");
    export_embeddings(&cfg, &ckpt, &again).unwrap();
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let report_dir = dir.path().join("probe");
    let summary = probe_report(&dump, &ProbeConfig { steps: 50, ..ProbeConfig::default() }, &report_dir).unwrap();
    let rows: Vec<ProbeRow> = read_csv(&report_dir.join("probe_report.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].mean_cosine, summary.probe.v_perp_labels);
    let scatter = fs::read_to_string(report_dir.join("norm_scatter.csv")).unwrap();
    assert_eq!(scatter.lines().next(), Some("id,split,perp_norm,par_norm"));
    assert_eq!(scatter.lines().count(), 1 + dump.len());
    assert!(report_dir.join("probe_summary.json").exists());
}

#[test]
fn base_checkpoint_cannot_export() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path().join("run"));
    cfg.model = ModelKind::Base;
    run_experiment(&cfg).unwrap();
    let err = export_embeddings(&cfg, &cfg.out_dir.join("checkpoint_seed0.json"), &dir.path().join("d.csv"))
        .unwrap_err();
    assert!(matches!(err, Error::Usage(_)));
}

#[test]
fn sweep_rows_follow_domain_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path().join("sweep"));
    cfg.scenario = ShiftScenario::AllShift;
    let sweep = run_small_data_sweep(&cfg, &[6, 3, 1]).unwrap();
    assert_eq!(sweep.rows.iter().map(|r| r.domains).collect::<Vec<_>>(), vec![6, 3, 1]);
    assert!(sweep.rows.windows(2).all(|w| w[0].train_samples > w[1].train_samples));
    let rows: Vec<SweepRow> = read_csv(&cfg.out_dir.join("sweep.csv")).unwrap();
    assert_eq!(rows, sweep.rows);
    assert!(cfg.out_dir.join("domains_3/metrics.csv").exists());

    let ascending = run_small_data_sweep(&cfg, &[1, 3]).unwrap_err();
    assert!(matches!(ascending, Error::Config(_)));
    let too_many = run_small_data_sweep(&cfg, &[99]).unwrap_err();
    assert!(matches!(too_many, Error::Config(_)));
}

#[test]
fn continual_evaluates_after_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path().join("cont"));
    cfg.scenario = ShiftScenario::AllShift;
    cfg.num_waves = 32;
    cfg.train_size = 480;
    cfg.continual_epochs = 1;
    let report = run_continual(&cfg).unwrap();
    assert_eq!(report.rows.len(), 11);
    assert_eq!(report.rows.iter().map(|r| r.step).collect::<Vec<_>>(), (0..11).collect::<Vec<_>>());
    assert_eq!(report.rows[10].domains_seen, 30);
    let rows: Vec<ContinualRow> = read_csv(&cfg.out_dir.join("continual.csv")).unwrap();
    assert_eq!(rows, report.rows);
}
