use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Network dimensions. Defaults are the full-size architecture; tests and
/// desk-scale experiments shrink the dims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub lstm_hidden_per_dir: usize,
    pub num_classes: usize,
    pub embed_dropout_p: f64,
    pub final_dropout_p: f64,
    pub max_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 50_000,
            embed_dim: 256,
            lstm_hidden_per_dir: 512,
            num_classes: 3,
            embed_dropout_p: 0.1,
            final_dropout_p: 0.5,
            max_len: crate::textpipe::DEFAULT_MAX_LEN,
        }
    }
}

impl ModelConfig {
    /// Output width of one bidirectional layer.
    pub fn lstm_out_dim(&self) -> usize {
        2 * self.lstm_hidden_per_dir
    }

    /// Width of the skip-connected attention input: embedding plus both
    /// BiLSTM outputs.
    pub fn attention_dim(&self) -> usize {
        self.embed_dim + 2 * self.lstm_out_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("lstm_hidden_per_dir", self.lstm_hidden_per_dir),
            ("num_classes", self.num_classes),
            ("max_len", self.max_len),
        ] {
            if v == 0 {
                bad.push(format!("{name} must be at least 1"));
            }
        }
        if self.vocab_size < 2 {
            bad.push("vocab_size must hold PAD and UNK".into());
        }
        for (name, p) in [
            ("embed_dropout_p", self.embed_dropout_p),
            ("final_dropout_p", self.final_dropout_p),
        ] {
            if !(0.0..1.0).contains(&p) {
                bad.push(format!("{name} must be in [0, 1)"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(format!("model config: {}", bad.join("; "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_attention_width() {
        let c = ModelConfig::default();
        assert_eq!(c.lstm_out_dim(), 1024);
        assert_eq!(c.attention_dim(), 2304);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_zero_dims() {
        let c = ModelConfig {
            embed_dim: 0,
            final_dropout_p: 1.0,
            ..Default::default()
        };
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("embed_dim") && msg.contains("final_dropout_p"), "{msg}");
    }
}
