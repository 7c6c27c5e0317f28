use super::{BiLstmParams, LstmDirection};
use crate::numcore::{
    hard_sigmoid, hard_sigmoid_grad, mat_vec_acc, outer_acc, vec_mat_acc, Real, Tensor2,
};
use crate::{ensure_contract, Result};

/// Per-step activations of one direction, indexed by processing step.
#[derive(Debug, Clone)]
pub struct DirectionCache<T> {
    /// Sequence position visited at each step.
    pub positions: Vec<usize>,
    /// Gate pre-activations, steps × 4H.
    pub pre: Vec<T>,
    /// Gate activations `[i, f, g, o]`, steps × 4H.
    pub gates: Vec<T>,
    /// Cell state, steps × H.
    pub cell: Vec<T>,
    pub tanh_cell: Vec<T>,
    /// Hidden state, steps × H.
    pub hidden: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct BiLstmCache<T> {
    pub forward: DirectionCache<T>,
    pub backward: DirectionCache<T>,
}

fn direction_forward<T: Real>(
    inputs: &Tensor2<T>,
    positions: Vec<usize>,
    p: &LstmDirection<T>,
) -> DirectionCache<T> {
    let h = p.hidden();
    let steps = positions.len();
    let mut cache = DirectionCache {
        pre: vec![T::zero(); steps * 4 * h],
        gates: vec![T::zero(); steps * 4 * h],
        cell: vec![T::zero(); steps * h],
        tanh_cell: vec![T::zero(); steps * h],
        hidden: vec![T::zero(); steps * h],
        positions,
    };
    let zeros = vec![T::zero(); h];
    for k in 0..steps {
        let pos = cache.positions[k];
        let (prev_h, prev_c) = if k == 0 {
            (zeros.clone(), zeros.clone())
        } else {
            (
                cache.hidden[(k - 1) * h..k * h].to_vec(),
                cache.cell[(k - 1) * h..k * h].to_vec(),
            )
        };
        let z = &mut cache.pre[k * 4 * h..(k + 1) * 4 * h];
        z.copy_from_slice(p.bias.data());
        vec_mat_acc(inputs.row(pos), &p.w_input, z);
        vec_mat_acc(&prev_h, &p.w_hidden, z);
        let a = &mut cache.gates[k * 4 * h..(k + 1) * 4 * h];
        for j in 0..h {
            a[j] = hard_sigmoid(z[j]);
            a[h + j] = hard_sigmoid(z[h + j]);
            a[2 * h + j] = z[2 * h + j].tanh();
            a[3 * h + j] = hard_sigmoid(z[3 * h + j]);
        }
        for j in 0..h {
            let c = a[h + j] * prev_c[j] + a[j] * a[2 * h + j];
            let tc = c.tanh();
            cache.cell[k * h + j] = c;
            cache.tanh_cell[k * h + j] = tc;
            cache.hidden[k * h + j] = a[3 * h + j] * tc;
        }
    }
    cache
}

/// Bidirectional hard-sigmoid LSTM over the first `real_len` rows of
/// `inputs` (max_len × d_in). Output is max_len × 2H with `[forward; backward]`
/// per row. Padding steps leave the state unchanged: the forward half of a
/// padding row repeats the last real state and the backward half is zero.
pub fn bilstm_forward<T: Real>(
    inputs: &Tensor2<T>,
    real_len: usize,
    params: &BiLstmParams<T>,
) -> Result<(Tensor2<T>, BiLstmCache<T>)> {
    let d_in = params.forward.input_dim();
    ensure_contract!(
        inputs.cols() == d_in,
        "bilstm: input width {} but layer expects {d_in}",
        inputs.cols()
    );
    ensure_contract!(
        real_len >= 1 && real_len <= inputs.rows(),
        "bilstm: real length {real_len} outside [1, {}]",
        inputs.rows()
    );
    let h = params.forward.hidden();
    let fwd = direction_forward(inputs, (0..real_len).collect(), &params.forward);
    let bwd = direction_forward(inputs, (0..real_len).rev().collect(), &params.backward);

    let mut out = Tensor2::zeros(inputs.rows(), 2 * h);
    for (k, &pos) in fwd.positions.iter().enumerate() {
        out.row_mut(pos)[..h].copy_from_slice(&fwd.hidden[k * h..(k + 1) * h]);
    }
    let last = &fwd.hidden[(real_len - 1) * h..real_len * h];
    for pos in real_len..inputs.rows() {
        out.row_mut(pos)[..h].copy_from_slice(last);
    }
    for (k, &pos) in bwd.positions.iter().enumerate() {
        out.row_mut(pos)[h..].copy_from_slice(&bwd.hidden[k * h..(k + 1) * h]);
    }
    Ok((
        out,
        BiLstmCache {
            forward: fwd,
            backward: bwd,
        },
    ))
}

fn direction_backward<T: Real>(
    inputs: &Tensor2<T>,
    cache: &DirectionCache<T>,
    d_out: &Tensor2<T>,
    col_offset: usize,
    p: &LstmDirection<T>,
    mut grads: Option<&mut LstmDirection<T>>,
    mut d_inputs: Option<&mut Tensor2<T>>,
) {
    let h = p.hidden();
    let steps = cache.positions.len();
    let mut dh_next = vec![T::zero(); h];
    let mut dc_next = vec![T::zero(); h];
    let mut dz = vec![T::zero(); 4 * h];
    let zeros = vec![T::zero(); h];
    for k in (0..steps).rev() {
        let pos = cache.positions[k];
        let z = &cache.pre[k * 4 * h..(k + 1) * 4 * h];
        let a = &cache.gates[k * 4 * h..(k + 1) * 4 * h];
        let tc = &cache.tanh_cell[k * h..(k + 1) * h];
        let prev_c = if k == 0 {
            &zeros[..]
        } else {
            &cache.cell[(k - 1) * h..k * h]
        };
        let dout_row = &d_out.row(pos)[col_offset..col_offset + h];
        for j in 0..h {
            let dh = dout_row[j] + dh_next[j];
            let (i, f, g, o) = (a[j], a[h + j], a[2 * h + j], a[3 * h + j]);
            let dc = dc_next[j] + dh * o * (T::one() - tc[j] * tc[j]);
            dz[j] = dc * g * hard_sigmoid_grad(z[j]);
            dz[h + j] = dc * prev_c[j] * hard_sigmoid_grad(z[h + j]);
            dz[2 * h + j] = dc * i * (T::one() - g * g);
            dz[3 * h + j] = dh * tc[j] * hard_sigmoid_grad(z[3 * h + j]);
            dc_next[j] = dc * f;
        }
        if let Some(g) = grads.as_deref_mut() {
            outer_acc(inputs.row(pos), &dz, &mut g.w_input);
            if k > 0 {
                outer_acc(&cache.hidden[(k - 1) * h..k * h], &dz, &mut g.w_hidden);
            }
            for (b, &d) in g.bias.data_mut().iter_mut().zip(&dz) {
                *b += d;
            }
        }
        if let Some(dx) = d_inputs.as_deref_mut() {
            mat_vec_acc(&p.w_input, &dz, dx.row_mut(pos));
        }
        dh_next.iter_mut().for_each(|v| *v = T::zero());
        mat_vec_acc(&p.w_hidden, &dz, &mut dh_next);
    }
}

/// Backprop through time for both directions. `d_out` is the gradient w.r.t.
/// the layer output (rows past the real length are ignored). Parameter
/// gradients accumulate into `grads` and input gradients into `d_inputs`
/// when those are given.
pub fn bilstm_backward<T: Real>(
    inputs: &Tensor2<T>,
    cache: &BiLstmCache<T>,
    d_out: &Tensor2<T>,
    params: &BiLstmParams<T>,
    grads: Option<&mut BiLstmParams<T>>,
    mut d_inputs: Option<&mut Tensor2<T>>,
) {
    let h = params.forward.hidden();
    let (gf, gb) = match grads {
        Some(g) => (Some(&mut g.forward), Some(&mut g.backward)),
        None => (None, None),
    };
    direction_backward(
        inputs,
        &cache.forward,
        d_out,
        0,
        &params.forward,
        gf,
        d_inputs.as_deref_mut(),
    );
    direction_backward(
        inputs,
        &cache.backward,
        d_out,
        h,
        &params.backward,
        gb,
        d_inputs,
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Rng;

    fn layer(d_in: usize, h: usize, seed: u64) -> BiLstmParams<f64> {
        let mut rng = Rng::new(seed);
        let mut dir = || {
            let mut d = LstmDirection {
                w_input: Tensor2::zeros(d_in, 4 * h),
                w_hidden: Tensor2::zeros(h, 4 * h),
                bias: Tensor2::zeros(1, 4 * h),
            };
            for t in [&mut d.w_input, &mut d.w_hidden, &mut d.bias] {
                for v in t.data_mut() {
                    *v = rng.uniform(-0.5, 0.5);
                }
            }
            d
        };
        BiLstmParams {
            forward: dir(),
            backward: dir(),
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut p = layer(3, 4, 1);
        for d in [&mut p.forward, &mut p.backward] {
            d.w_input.fill(0.0);
            d.w_hidden.fill(0.0);
            d.bias.fill(0.0);
        }
        let x = Tensor2::filled(5, 3, 0.7);
        let (out, _) = bilstm_forward(&x, 4, &p).unwrap();
        assert_eq!(out.shape(), (5, 8));
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_directions_see_the_same_input() {
        let mut p = layer(3, 4, 2);
        p.backward = p.forward.clone();
        let x = Tensor2::from_rows(&[&[0.1, -0.4, 0.9], &[0.0, 0.0, 0.0]]);
        let (out, _) = bilstm_forward(&x, 1, &p).unwrap();
        assert_eq!(&out.row(0)[..4], &out.row(0)[4..]);
    }

    #[test]
    fn padding_rows_carry_state() {
        let p = layer(3, 4, 3);
        let x = Tensor2::from_rows(&[&[0.1, 0.2, 0.3], &[-0.3, 0.5, 0.0], &[9.0, 9.0, 9.0]]);
        let (out, _) = bilstm_forward(&x, 2, &p).unwrap();
        assert_eq!(&out.row(2)[..4], &out.row(1)[..4]);
        assert!(out.row(2)[4..].iter().all(|&v| v == 0.0));
        // the junk in the padding row never reaches the real rows
        let mut y = x.clone();
        y.row_mut(2).fill(-4.0);
        let (out2, _) = bilstm_forward(&y, 2, &p).unwrap();
        assert_eq!(out.row(0), out2.row(0));
        assert_eq!(out.row(1), out2.row(1));
    }

    #[test]
    fn rejects_wrong_width() {
        let p = layer(3, 4, 4);
        assert!(bilstm_forward(&Tensor2::zeros(2, 5), 2, &p).is_err());
        assert!(bilstm_forward(&Tensor2::zeros(2, 3), 0, &p).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let p = layer(3, 4, 5);
        let mut rng = Rng::new(6);
        let x = Tensor2::from_vec(4, 3, (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let weights = Tensor2::from_vec(4, 8, (0..32).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let n = 3;
        // scalar objective: Σ weights ∘ output over the real rows
        let objective = |xx: &Tensor2<f64>, pp: &BiLstmParams<f64>| {
            let (out, _) = bilstm_forward(xx, n, pp).unwrap();
            (0..n).map(|r| crate::numcore::dot(out.row(r), weights.row(r))).sum::<f64>()
        };
        let (_, cache) = bilstm_forward(&x, n, &p).unwrap();
        let mut d_out = weights.clone();
        d_out.row_mut(3).fill(0.0);
        let mut g = p.clone();
        for d in [&mut g.forward, &mut g.backward] {
            d.w_input.fill(0.0);
            d.w_hidden.fill(0.0);
            d.bias.fill(0.0);
        }
        let mut dx = Tensor2::zeros(4, 3);
        bilstm_backward(&x, &cache, &d_out, &p, Some(&mut g), Some(&mut dx));

        let eps = 1e-6;
        for r in 0..4 {
            for c in 0..3 {
                let mut a = x.clone();
                a.set(r, c, x.get(r, c) + eps);
                let mut b = x.clone();
                b.set(r, c, x.get(r, c) - eps);
                let num = (objective(&a, &p) - objective(&b, &p)) / (2.0 * eps);
                assert!((num - dx.get(r, c)).abs() < 1e-7, "dx[{r},{c}] {num} vs {}", dx.get(r, c));
            }
        }
        let coords = [(0usize, 1usize), (2, 7), (1, 12), (0, 15)];
        for &(r, c) in &coords {
            let mut a = p.clone();
            a.backward.w_input.set(r, c, p.backward.w_input.get(r, c) + eps);
            let mut b = p.clone();
            b.backward.w_input.set(r, c, p.backward.w_input.get(r, c) - eps);
            let num = (objective(&x, &a) - objective(&x, &b)) / (2.0 * eps);
            assert!((num - g.backward.w_input.get(r, c)).abs() < 1e-7);

            let mut a = p.clone();
            a.forward.w_hidden.set(r, c, p.forward.w_hidden.get(r, c) + eps);
            let mut b = p.clone();
            b.forward.w_hidden.set(r, c, p.forward.w_hidden.get(r, c) - eps);
            let num = (objective(&x, &a) - objective(&x, &b)) / (2.0 * eps);
            assert!((num - g.forward.w_hidden.get(r, c)).abs() < 1e-7);
        }
    }
}
