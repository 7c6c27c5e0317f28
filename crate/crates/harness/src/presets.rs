//! Desk-scale synthetic experiment: three domains, tiny network dims,
//! short per-phase epoch budgets.

use std::path::PathBuf;

use pseudolabel::selftrain::StudentMode;
use pseudolabel::training::TrainConfig;

use crate::config::{DatasetFormat, EvalDataset, ExperimentConfig, ModelOverrides, TrainingSettings};
use crate::synth::{SynthManifest, SynthSpec};

/// Pseudolabel confidence cut used by the desk-scale preset.
pub const DESK_THRESHOLD: f64 = 0.85;

pub fn desk_synth_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        domains: 3,
        labeled_per_domain: 2000,
        unlabeled_total: 20000,
        test_per_domain: 1000,
        rho: 0.5,
        sentiment_density: 0.45,
        label_purity: 0.85,
        seed,
        ..SynthSpec::default()
    }
}

pub fn desk_settings(threshold: Option<f64>) -> TrainingSettings {
    TrainingSettings {
        model: ModelOverrides {
            embed_dim: Some(16),
            lstm_hidden_per_dir: Some(16),
            max_len: Some(16),
            ..Default::default()
        },
        teacher: TrainConfig {
            learning_rate: 3e-3,
            max_epochs: 30,
            patience: 3,
            ..Default::default()
        },
        student: Some(TrainConfig {
            learning_rate: 3e-3,
            max_epochs: 4,
            patience: 1,
            ..Default::default()
        }),
        threshold,
        ..Default::default()
    }
}

/// Teacher trained on the teacher domain, evaluated on every other domain's
/// test split (`DOMAIN-<k>`) and on its own (`TEACHER-TEST`).
pub fn desk_experiment(
    manifest: &SynthManifest,
    settings: TrainingSettings,
    modes: Vec<StudentMode>,
    seed: u64,
    output_dir: PathBuf,
) -> ExperimentConfig {
    let t = manifest.spec.teacher_domain;
    ExperimentConfig {
        teacher_train: manifest.labeled[t].clone(),
        teacher_val: None,
        teacher_test: Some(manifest.test[t].clone()),
        unlabeled: vec![manifest.unlabeled.clone()],
        eval: (0..manifest.test.len())
            .filter(|&d| d != t)
            .map(|d| EvalDataset {
                name: format!("DOMAIN-{d}"),
                path: manifest.test[d].clone(),
                format: DatasetFormat::Jsonl,
            })
            .collect(),
        settings,
        modes,
        seed,
        output_dir,
    }
}
