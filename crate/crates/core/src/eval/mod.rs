//! Metrics, vote handling and embedding analyses.

mod analysis;
mod dump;
mod metrics;
mod probe;

pub use crate::method::majority_vote;
pub use analysis::{
    norm_scatter, weight_cosine_report, write_norm_scatter, z_similarity, NormRow, ProbeReport, ZSimilarity,
};
pub use dump::{DumpRow, EmbeddingDump};
pub use metrics::{accuracy, cohens_kappa, macro_f1, ConfusionMatrix, Metrics};
pub use probe::{all_pairs_cosine, fit_linear_probe, matched_cosine, LinearProbe, ProbeConfig, Standardizer};
