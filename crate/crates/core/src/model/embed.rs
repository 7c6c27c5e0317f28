use crate::numcore::{dropout, DropoutStyle, Mode, Real, Rng, Tensor2};
use crate::{ensure_contract, Result};

#[derive(Debug, Clone)]
pub struct EmbedCache<T> {
    pub ids: Vec<u32>,
    /// tanh(lookup), before dropout; max_len × E
    pub activations: Tensor2<T>,
    /// 0/1 channel mask; max_len × E
    pub mask: Tensor2<T>,
    pub scale: T,
}

/// Lookup → tanh → channel dropout (train mode only).
pub fn embed_forward<T: Real>(
    ids: &[u32],
    table: &Tensor2<T>,
    dropout_p: f64,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Tensor2<T>, EmbedCache<T>)> {
    let (vocab, dim) = table.shape();
    let mut act = Tensor2::zeros(ids.len(), dim);
    for (t, &id) in ids.iter().enumerate() {
        ensure_contract!(
            (id as usize) < vocab,
            "token id {id} outside vocabulary of size {vocab}"
        );
        for (o, &w) in act.row_mut(t).iter_mut().zip(table.row(id as usize)) {
            *o = w.tanh();
        }
    }
    let (out, mask) = dropout(&act, dropout_p, mode, rng, DropoutStyle::Channel)?;
    let scale = if mode == Mode::Train && dropout_p > 0.0 {
        T::of(1.0 / (1.0 - dropout_p))
    } else {
        T::one()
    };
    Ok((
        out,
        EmbedCache {
            ids: ids.to_vec(),
            activations: act,
            mask,
            scale,
        },
    ))
}

/// Scatters `d_out` (gradient w.r.t. the dropped-out embeddings) of the first
/// `real_len` positions into `grad_table`.
pub fn embed_backward<T: Real>(
    cache: &EmbedCache<T>,
    d_out: &Tensor2<T>,
    real_len: usize,
    grad_table: &mut Tensor2<T>,
) {
    for t in 0..real_len {
        let row = grad_table.row_mut(cache.ids[t] as usize);
        let y = cache.activations.row(t);
        let m = cache.mask.row(t);
        for (j, g) in row.iter_mut().enumerate() {
            let d = d_out.get(t, j) * m[j] * cache.scale;
            *g += d * (T::one() - y[j] * y[j]);
        }
    }
}
