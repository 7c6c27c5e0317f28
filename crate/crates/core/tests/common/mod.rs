#![allow(dead_code)]

use pseudolabel::model::{ModelConfig, ModelParams};
use pseudolabel::numcore::Rng;
use pseudolabel::textpipe::{EncodedExample, SentimentLabel};

/// vocab 20, embed 8, hidden 6, len 5.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        vocab_size: 20,
        embed_dim: 8,
        lstm_hidden_per_dir: 6,
        max_len: 5,
        ..Default::default()
    }
}

pub fn encoded(ids: &[u32], max_len: usize, label: Option<SentimentLabel>) -> EncodedExample {
    let mut token_ids = vec![0; max_len];
    let mut mask = vec![0; max_len];
    for (i, &id) in ids.iter().take(max_len).enumerate() {
        token_ids[i] = id;
        mask[i] = 1;
    }
    EncodedExample {
        token_ids,
        mask,
        label,
    }
}

/// Two examples: one full length, one padded.
pub fn tiny_batch() -> Vec<EncodedExample> {
    vec![
        encoded(&[3, 7, 2, 11, 5], 5, Some(SentimentLabel::Positive)),
        encoded(&[9, 1, 14], 5, Some(SentimentLabel::Negative)),
    ]
}

pub fn tiny_params(seed: u64) -> ModelParams<f64> {
    ModelParams::init(&tiny_config(), &mut Rng::new(seed)).unwrap()
}

use pseudolabel::model::model_forward;
use pseudolabel::numcore::{softmax_rows, Mode, Tensor2};

/// Mean cross-entropy of `batch` at `params` minus its value at the point
/// that produced `ref_logits`, evaluated as
/// `log1p(Σ p0·expm1(z - z0)) - (z_t - z0_t)` so the small differences a
/// central difference takes are not lost to rounding of a loss near ln 3.
/// Same gradient as the loss itself.
pub fn loss_delta(
    batch: &[EncodedExample],
    params: &ModelParams<f64>,
    config: &ModelConfig,
    mode: Mode,
    seed: u64,
    ref_logits: &Tensor2<f64>,
) -> f64 {
    let (z, _, _) = model_forward(batch, params, config, mode, &mut Rng::new(seed)).unwrap();
    let p0 = softmax_rows(ref_logits);
    let mut total = 0.0;
    for (i, ex) in batch.iter().enumerate() {
        let t = ex.label.unwrap().index();
        let acc: f64 = (0..z.cols())
            .map(|k| p0.get(i, k) * (z.get(i, k) - ref_logits.get(i, k)).exp_m1())
            .sum();
        total += acc.ln_1p() - (z.get(i, t) - ref_logits.get(i, t));
    }
    total / batch.len() as f64
}
