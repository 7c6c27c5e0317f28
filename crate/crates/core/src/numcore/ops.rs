use serde::{Deserialize, Serialize};

use super::{Real, Rng, Tensor2};
use crate::{ensure_contract, Error, Result};

/// Train mode samples dropout masks; eval mode is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutStyle {
    /// Each entry independently.
    Element,
    /// Whole columns (feature channels) of a sequence matrix at once.
    Channel,
}

/// Probability floor inside the log of the cross-entropy.
pub const LOG_EPS: f64 = 1e-12;

pub fn matmul<T: Real>(a: &Tensor2<T>, b: &Tensor2<T>) -> Result<Tensor2<T>> {
    ensure_contract!(
        a.cols() == b.rows(),
        "matmul: {}x{} · {}x{}",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
    let mut out = Tensor2::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let row = out.row_mut(i);
        for (k, &x) in a.row(i).iter().enumerate() {
            super::axpy(x, b.row(k), row);
        }
    }
    ensure_contract!(out.all_finite(), "matmul: result overflowed");
    Ok(out)
}

pub fn tanh_ew<T: Real>(x: &Tensor2<T>) -> Tensor2<T> {
    x.map(|v| v.tanh())
}

/// `clamp(0.2·x + 0.5, 0, 1)`
#[inline]
pub fn hard_sigmoid<T: Real>(x: T) -> T {
    (T::of(0.2) * x + T::of(0.5)).max(T::zero()).min(T::one())
}

/// Derivative of [`hard_sigmoid`] w.r.t. its input; zero on the clamped
/// plateaus (and at the kinks).
#[inline]
pub fn hard_sigmoid_grad<T: Real>(x: T) -> T {
    let y = T::of(0.2) * x + T::of(0.5);
    if y > T::zero() && y < T::one() {
        T::of(0.2)
    } else {
        T::zero()
    }
}

pub fn hard_sigmoid_ew<T: Real>(x: &Tensor2<T>) -> Tensor2<T> {
    x.map(hard_sigmoid)
}

/// In-place softmax of one slice with max subtraction.
pub fn softmax_in_place<T: Real>(v: &mut [T]) {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax_rows<T: Real>(x: &Tensor2<T>) -> Tensor2<T> {
    let mut out = x.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

/// Mean negative log-likelihood of `targets` under `probs`, plus the gradient
/// of that mean w.r.t. the logits that produced `probs` through a softmax.
pub fn cross_entropy<T: Real>(probs: &Tensor2<T>, targets: &[usize]) -> Result<(T, Tensor2<T>)> {
    ensure_contract!(
        probs.rows() == targets.len(),
        "cross_entropy: {} rows but {} targets",
        probs.rows(),
        targets.len()
    );
    ensure_contract!(probs.rows() > 0, "cross_entropy: empty batch");
    let classes = probs.cols();
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::Contract(format!(
            "cross_entropy: target {bad} outside [0, {classes})"
        )));
    }
    let n = T::of(probs.rows() as f64);
    let eps = T::of(LOG_EPS);
    let mut loss = T::zero();
    let mut grad = probs.clone();
    for (i, &t) in targets.iter().enumerate() {
        loss -= probs.get(i, t).max(eps).ln();
        let g = grad.row_mut(i);
        g[t] -= T::one();
        for v in g.iter_mut() {
            *v /= n;
        }
    }
    Ok((loss / n, grad))
}

/// Inverted dropout. Returns the output and a 0/1 keep mask with the shape of
/// `x`; kept entries are scaled by `1/(1-p)` in train mode. Eval mode returns
/// `x` unchanged without touching `rng`.
pub fn dropout<T: Real>(
    x: &Tensor2<T>,
    p: f64,
    mode: Mode,
    rng: &mut Rng,
    style: DropoutStyle,
) -> Result<(Tensor2<T>, Tensor2<T>)> {
    ensure_contract!((0.0..1.0).contains(&p), "dropout probability {p} not in [0, 1)");
    let ones = Tensor2::filled(x.rows(), x.cols(), T::one());
    if mode == Mode::Eval || p == 0.0 {
        return Ok((x.clone(), ones));
    }
    let mut mask = ones;
    match style {
        DropoutStyle::Element => {
            for m in mask.data_mut() {
                if rng.bernoulli(p) {
                    *m = T::zero();
                }
            }
        }
        DropoutStyle::Channel => {
            for c in 0..x.cols() {
                if rng.bernoulli(p) {
                    for r in 0..x.rows() {
                        mask.set(r, c, T::zero());
                    }
                }
            }
        }
    }
    let scale = T::of(1.0 / (1.0 - p));
    let mut y = x.clone();
    for (v, &m) in y.data_mut().iter_mut().zip(mask.data()) {
        *v = *v * m * scale;
    }
    Ok((y, mask))
}
