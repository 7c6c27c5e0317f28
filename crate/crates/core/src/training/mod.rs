//! Optimizer, early stopping, and the chain-thaw schedule.

mod adam;
mod chain_thaw;
mod classifier;
mod config;
mod converge;
mod eval;

pub use adam::{adam_step, AdamState};
pub use chain_thaw::{chain_thaw_plan, chain_thaw_train, train_with_plan, Phase, PhasePlan};
pub use classifier::{encode_labeled, train_classifier};
pub use config::TrainConfig;
pub use converge::{
    accuracy_encoded, fit_until_converged, run_until_converged, EpochOutcome, EpochRecord,
    TrainTrace,
};
pub use eval::{evaluate_accuracy, evaluate_accuracy_with};
