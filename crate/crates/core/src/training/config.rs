use serde::{Deserialize, Serialize};

use crate::numcore::Exec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epoch budget of a single convergence run (one chain-thaw phase).
    pub max_epochs: usize,
    /// Consecutive non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Root seed for callers that do not supply their own.
    pub seed: u64,
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            bad.push("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            bad.push("batch_size must be at least 1");
        }
        if self.patience == 0 {
            bad.push("patience must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            bad.push("adam betas must be in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            bad.push("epsilon must be positive");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(format!("train config: {}", bad.join("; "))))
        }
    }
}
