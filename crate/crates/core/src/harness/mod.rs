//! Experiment configuration, orchestration and report files.
//!
//! Every run writes its tables as CSV and a JSON summary that repeats the
//! configuration, so a result directory is self-describing.

mod config;
mod experiments;
mod report;
mod train;

pub use config::{ExperimentConfig, ModelKind};
pub use experiments::{
    analyze_dump, default_sweep_counts, embed_datasets, export_embeddings, probe_report, run_continual,
    run_experiment, run_on, run_small_data_sweep, write_report, ProbeSummary, Z_PAIR_CAP,
};
pub use report::{
    read_csv, read_json, write_csv, write_json, ContinualReport, ContinualRow, EpochRecord, MeanStd, MetricsReport,
    MetricsRow, MetricsSummary, ProbeRow, RunResult, SweepReport, SweepRow,
};
pub use train::{build_model, confusion, evaluate, prepare_data, train_epoch, train_one, Datasets};
