//! Preamble-perturbation defense: bounded per-subcarrier LTS perturbations
//! optimized end to end against a white-box eavesdropper, a
//! diversity-regularized codebook of them, and hinge-loss variants that
//! break the eavesdropper's classification instead of reconstruction.

mod codebook;
mod optimize;
mod perturbation;

pub use codebook::{load_codebook, save_codebook, select_index, select_perturbation, Codebook};
pub use optimize::{
    diversity_loss, loss_targeted, loss_untargeted, mean_pairwise_similarity,
    optimize_classification_guard, optimize_codebook, optimize_single, GuardMode, OptReport,
};
pub use perturbation::{
    apply_update, make_perturbation, random_perturbation, GuardConfig, Perturbation,
};
