use super::TrainConfig;
use crate::model::{GroupSet, ModelParams};
use crate::numcore::Real;
use crate::{ensure_contract, Result};

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of the groups in `active`. Parameters and
/// moments of the other groups are not touched.
pub fn adam_step<T: Real>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState<T>,
    config: &TrainConfig,
    active: GroupSet,
) -> Result<()> {
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2) = (config.beta1, config.beta2);
    let bc1 = 1.0 - b1.powf(t);
    let bc2 = 1.0 - b2.powf(t);
    // lr·m̂/(√v̂+ε) folded into a single step size; ε stays outside the sqrt
    let step_size = T::of(config.learning_rate / bc1);
    let sqrt_bc2 = T::of(bc2.sqrt());
    let eps = T::of(config.epsilon);
    let (b1, b2) = (T::of(b1), T::of(b2));
    let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
    for g in active.iter() {
        let ps = params.group_mut(g);
        let gs = grads.group(g);
        let ms = state.m.group_mut(g);
        let vs = state.v.group_mut(g);
        for (((p, gr), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            ensure_contract!(
                p.shape() == gr.shape() && p.shape() == m.shape() && p.shape() == v.shape(),
                "adam: {g} shapes disagree ({:?} vs {:?})",
                p.shape(),
                gr.shape()
            );
            for (((w, &d), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(gr.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = b1 * *mi + one_b1 * d;
                *vi = b2 * *vi + one_b2 * d * d;
                *w -= step_size * *mi / (vi.sqrt() / sqrt_bc2 + eps);
            }
        }
    }
    Ok(())
}
