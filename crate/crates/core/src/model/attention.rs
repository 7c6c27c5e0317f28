use crate::numcore::{axpy, dot, softmax_in_place, Real, Tensor2};
use crate::{ensure_contract, Result};

#[derive(Debug, Clone)]
pub struct AttentionCache<T> {
    /// Skip-connected features of the real positions, real_len × A.
    pub features: Tensor2<T>,
    /// Softmax weights over the real positions.
    pub weights: Vec<T>,
}

/// Concatenates `[embed; lstm0; lstm1]` per position, scores each real
/// position with `score · h_t`, and returns the softmax-weighted sum together
/// with max_len attention weights (exactly zero on padding).
pub fn attention_forward<T: Real>(
    embed_out: &Tensor2<T>,
    lstm0_out: &Tensor2<T>,
    lstm1_out: &Tensor2<T>,
    real_len: usize,
    score: &Tensor2<T>,
) -> Result<(Vec<T>, Vec<T>, AttentionCache<T>)> {
    let max_len = embed_out.rows();
    ensure_contract!(real_len >= 1, "attention over an all-masked sequence");
    ensure_contract!(
        real_len <= max_len && lstm0_out.rows() == max_len && lstm1_out.rows() == max_len,
        "attention: inconsistent sequence lengths"
    );
    let (e, l0, l1) = (embed_out.cols(), lstm0_out.cols(), lstm1_out.cols());
    let a = e + l0 + l1;
    ensure_contract!(
        score.shape() == (1, a),
        "attention: score vector {:?} but features are {a} wide",
        score.shape()
    );
    let mut features = Tensor2::zeros(real_len, a);
    let mut weights = vec![T::zero(); real_len];
    for (t, w) in weights.iter_mut().enumerate() {
        let row = features.row_mut(t);
        row[..e].copy_from_slice(embed_out.row(t));
        row[e..e + l0].copy_from_slice(lstm0_out.row(t));
        row[e + l0..].copy_from_slice(lstm1_out.row(t));
        *w = dot(row, score.data());
    }
    softmax_in_place(&mut weights);
    let mut pooled = vec![T::zero(); a];
    for (t, &w) in weights.iter().enumerate() {
        axpy(w, features.row(t), &mut pooled);
    }
    let mut full = weights.clone();
    full.resize(max_len, T::zero());
    Ok((pooled, full, AttentionCache { features, weights }))
}

/// Given `d_pooled`, accumulates the score-vector gradient into `grad_score`
/// (if given) and returns the gradient w.r.t. the real-position features
/// (if `need_features`).
pub fn attention_backward<T: Real>(
    cache: &AttentionCache<T>,
    d_pooled: &[T],
    score: &Tensor2<T>,
    grad_score: Option<&mut Tensor2<T>>,
    need_features: bool,
) -> Option<Tensor2<T>> {
    let n = cache.weights.len();
    // d weight_t = h_t · d_pooled, then through the softmax
    let dw: Vec<T> = (0..n).map(|t| dot(cache.features.row(t), d_pooled)).collect();
    let mean: T = cache.weights.iter().zip(&dw).map(|(&a, &d)| a * d).sum();
    let d_score: Vec<T> = cache
        .weights
        .iter()
        .zip(&dw)
        .map(|(&a, &d)| a * (d - mean))
        .collect();
    if let Some(gs) = grad_score {
        let g = gs.data_mut();
        for (t, &ds) in d_score.iter().enumerate() {
            axpy(ds, cache.features.row(t), g);
        }
    }
    if !need_features {
        return None;
    }
    let mut d_features = Tensor2::zeros(n, score.cols());
    for (t, (&w, &ds)) in cache.weights.iter().zip(&d_score).take(n).enumerate() {
        let row = d_features.row_mut(t);
        axpy(w, d_pooled, row);
        axpy(ds, score.data(), row);
    }
    Some(d_features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mats(len: usize) -> (Tensor2<f64>, Tensor2<f64>, Tensor2<f64>) {
        let f = |w: usize, k: f64| {
            Tensor2::from_vec(len, w, (0..len * w).map(|i| ((i as f64) * k).sin()).collect()).unwrap()
        };
        (f(2, 0.3), f(4, 0.7), f(4, 1.1))
    }

    #[test]
    fn single_position_gets_all_weight() {
        let (e, a, b) = mats(3);
        let score = Tensor2::filled(1, 10, 0.4);
        let (pooled, w, _) = attention_forward(&e, &a, &b, 1, &score).unwrap();
        assert_eq!(w, [1.0, 0.0, 0.0]);
        assert_eq!(&pooled[..2], e.row(0));
    }

    #[test]
    fn zero_scores_are_uniform() {
        let (e, a, b) = mats(6);
        let score = Tensor2::zeros(1, 10);
        let (_, w, _) = attention_forward(&e, &a, &b, 4, &score).unwrap();
        assert_eq!(w, [0.25, 0.25, 0.25, 0.25, 0.0, 0.0]);
    }

    #[test]
    fn all_masked_is_rejected() {
        let (e, a, b) = mats(2);
        assert!(attention_forward(&e, &a, &b, 0, &Tensor2::zeros(1, 10)).is_err());
        assert!(attention_forward(&e, &a, &b, 1, &Tensor2::zeros(1, 9)).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (e, a, b) = mats(4);
        let score = Tensor2::from_vec(1, 10, (0..10).map(|i| (i as f64 * 0.37).cos()).collect()).unwrap();
        let probe: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 - 0.3).collect();
        let f = |s: &Tensor2<f64>| {
            let (p, _, _) = attention_forward(&e, &a, &b, 3, s).unwrap();
            dot(&p, &probe)
        };
        let (_, _, cache) = attention_forward(&e, &a, &b, 3, &score).unwrap();
        let mut g = Tensor2::zeros(1, 10);
        attention_backward(&cache, &probe, &score, Some(&mut g), false);
        for c in 0..10 {
            let mut plus = score.clone();
            plus.set(0, c, score.get(0, c) + 1e-6);
            let mut minus = score.clone();
            minus.set(0, c, score.get(0, c) - 1e-6);
            let num = (f(&plus) - f(&minus)) / 2e-6;
            assert!((num - g.get(0, c)).abs() < 1e-8);
        }
    }
}
