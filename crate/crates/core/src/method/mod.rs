//! The many-domain method: three-step forward pass, mutual reconstruction,
//! the four objectives, Siamese training and inference, plus the ERM baseline.
//!
//! Forward pass for an input `x`:
//!
//! 1. `v = h_θ(x)` (backbone features)
//! 2. `z = q_φ(v)` (domain factor)
//! 3. `v_perp = v − z·⟨v,z⟩/‖z‖²`, then `p(y) = softmax(⟨w_k, v_perp⟩/τ)`
//!
//! Training feeds two same-domain samples at once and couples them through
//! reconstruction (`v̂' = p_ψ(z, y')`), domain-factor similarity and a
//! normalized batch-mean discrepancy between the `v` and `z` spaces.

mod labels;
mod losses;
mod model;
mod projection;

pub use labels::{majority_vote, VoteLabel};
pub use losses::{
    combined_loss, loss_mmd, loss_mmd_with, loss_rec, loss_sim, loss_sup, mmd_denominator, rows_cosine, vote_targets, LossBreakdown, LossParts,
    LossWeights,
};
pub use model::{
    base_train_step, manydg_train_step, AnyModel, BaseConfig, BaseModel, Batch, Embeddings, ManyDgConfig,
    ManyDgModel, PairedBatch, SideForward,
};
pub use projection::{orthogonal_project, project_rows, ProjectionResult, NORM_EPS};
