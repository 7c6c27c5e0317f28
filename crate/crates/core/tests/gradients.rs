mod common;

use common::{loss_delta, tiny_batch, tiny_config, tiny_params};
use pseudolabel::model::{
    loss_and_grad, model_backward, model_forward, GroupSet, LayerGroup, ModelParams,
};
use pseudolabel::numcore::{cross_entropy, grad_check, Exec, Mode, Rng, Tensor2};

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

/// Loss as a function of the flattened parameters; train mode re-seeds the
/// generator on every call so the dropout masks stay fixed.
fn objective(flat: &[f64], template: &ModelParams<f64>, mode: Mode, seed: u64, z0: &Tensor2<f64>) -> f64 {
    let mut p = template.clone();
    p.assign_flat_f64(flat).unwrap();
    loss_delta(&tiny_batch(), &p, &tiny_config(), mode, seed, z0)
}

fn check(mode: Mode, seed: u64) {
    let params = tiny_params(seed);
    let config = tiny_config();
    let (_, grads) = loss_and_grad(
        Exec::Sequential,
        &tiny_batch(),
        &params,
        &config,
        mode,
        &mut Rng::new(99),
        GroupSet::ALL,
    )
    .unwrap();
    let (z0, _, _) = model_forward(&tiny_batch(), &params, &config, mode, &mut Rng::new(99)).unwrap();
    let flat = params.to_flat_f64();
    let analytic = grads.to_flat_f64();
    // per group so a failure names the layer
    let mut offset = 0;
    for g in LayerGroup::ALL {
        let n: usize = params.group(g).iter().map(|t| t.len()).sum();
        let report = grad_check(&flat[offset..offset + n], &analytic[offset..offset + n], EPS, |w| {
            let mut full = flat.clone();
            full[offset..offset + n].copy_from_slice(w);
            objective(&full, &params, mode, 99, &z0)
        })
        .unwrap();
        assert!(report.max_rel_error < TOL, "{g} ({mode:?}): {report:?}");
        offset += n;
    }
}

#[test]
fn full_model_gradient_eval_mode() {
    check(Mode::Eval, 1);
    check(Mode::Eval, 2);
}

#[test]
fn full_model_gradient_train_mode_with_fixed_masks() {
    check(Mode::Train, 3);
}

#[test]
fn zero_grad_logits_give_zero_gradients() {
    let params = tiny_params(4);
    let (_, probs, cache) =
        model_forward(&tiny_batch(), &params, &tiny_config(), Mode::Eval, &mut Rng::new(0)).unwrap();
    let zero = probs.map(|_| 0.0);
    let g = model_backward(&cache, &zero, &params).unwrap();
    assert!(g.to_flat_f64().iter().all(|&v| v == 0.0));
}

#[test]
fn unused_vocabulary_rows_get_no_gradient() {
    let params = tiny_params(5);
    let (_, grads) = loss_and_grad(
        Exec::Sequential,
        &tiny_batch(),
        &params,
        &tiny_config(),
        Mode::Train,
        &mut Rng::new(1),
        GroupSet::ALL,
    )
    .unwrap();
    let used = [3u32, 7, 2, 11, 5, 9, 1, 14];
    for row in 0..20u32 {
        let nonzero = grads.embed.row(row as usize).iter().any(|&v| v != 0.0);
        assert_eq!(nonzero, used.contains(&row), "row {row}");
    }
}

#[test]
fn gradient_shapes_match_params() {
    let params = tiny_params(6);
    let (_, grads) = loss_and_grad(
        Exec::Sequential,
        &tiny_batch(),
        &params,
        &tiny_config(),
        Mode::Eval,
        &mut Rng::new(0),
        GroupSet::ALL,
    )
    .unwrap();
    for (a, b) in params.tensors().iter().zip(grads.tensors()) {
        assert_eq!(a.shape(), b.shape());
    }
}

#[test]
fn partial_backprop_matches_full_on_requested_groups() {
    let params = tiny_params(7);
    let config = tiny_config();
    let full = loss_and_grad(Exec::Sequential, &tiny_batch(), &params, &config, Mode::Train, &mut Rng::new(5), GroupSet::ALL)
        .unwrap()
        .1;
    for g in LayerGroup::ALL {
        let only = loss_and_grad(Exec::Sequential, &tiny_batch(), &params, &config, Mode::Train, &mut Rng::new(5), GroupSet::only(g))
            .unwrap()
            .1;
        for other in LayerGroup::ALL {
            if other == g {
                assert!(only.group_bits_equal(&full, g), "{g}");
            } else {
                assert!(only.group(other).iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
            }
        }
    }
}

#[test]
fn sequential_and_parallel_gradients_are_bit_identical() {
    let params = tiny_params(8);
    let config = tiny_config();
    let batch: Vec<_> = (0..20).flat_map(|_| tiny_batch()).collect();
    let a = loss_and_grad(Exec::Sequential, &batch, &params, &config, Mode::Train, &mut Rng::new(2), GroupSet::ALL).unwrap();
    let b = loss_and_grad(Exec::Parallel, &batch, &params, &config, Mode::Train, &mut Rng::new(2), GroupSet::ALL).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    for g in LayerGroup::ALL {
        assert!(a.1.group_bits_equal(&b.1, g));
    }
}

#[test]
fn cross_entropy_gradient_through_softmax() {
    let params = tiny_params(9);
    let (_, probs, _) =
        model_forward(&tiny_batch(), &params, &tiny_config(), Mode::Eval, &mut Rng::new(0)).unwrap();
    let (loss, g) = cross_entropy(&probs, &[2, 0]).unwrap();
    assert!(loss > 0.0);
    for r in 0..2 {
        assert!(g.row(r).iter().sum::<f64>().abs() < 1e-12);
    }
}
