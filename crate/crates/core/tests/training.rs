mod common;

use common::{encoded, tiny_config};
use pseudolabel::model::{loss_and_grad, Classifier, GroupSet, LayerGroup, ModelParams};
use pseudolabel::numcore::{Exec, Mode, Rng};
use pseudolabel::textpipe::{EncodedExample, LabeledExample, SentimentLabel, Vocabulary};
use pseudolabel::training::{
    adam_step, chain_thaw_train, evaluate_accuracy, fit_until_converged, AdamState, TrainConfig,
};

fn dataset(n: usize, seed: u64) -> Vec<EncodedExample> {
    let config = tiny_config();
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let len = rng.range_inclusive(1, config.max_len);
            let ids: Vec<u32> = (0..len).map(|_| 2 + rng.below(18) as u32).collect();
            let label = SentimentLabel::ALL[(ids[0] as usize - 2) / 6];
            encoded(&ids, config.max_len, Some(label))
        })
        .collect()
}

fn quick() -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        batch_size: 8,
        max_epochs: 3,
        patience: 2,
        exec: Exec::Sequential,
        ..Default::default()
    }
}

#[test]
fn loss_decreases_over_fifty_steps() {
    let config = tiny_config();
    let batch = dataset(16, 1);
    let mut params = ModelParams::<f32>::init(&config, &mut Rng::new(2)).unwrap();
    let mut adam = AdamState::new(&params);
    let tc = quick();
    let eval_loss = |p: &ModelParams<f32>| {
        loss_and_grad(Exec::Sequential, &batch, p, &config, Mode::Eval, &mut Rng::new(0), GroupSet::ALL)
            .unwrap()
            .0
    };
    let before = eval_loss(&params);
    let mut rng = Rng::new(3);
    for _ in 0..50 {
        let (_, g) = loss_and_grad(Exec::Sequential, &batch, &params, &config, Mode::Train, &mut rng, GroupSet::ALL)
            .unwrap();
        adam_step(&mut params, &g, &mut adam, &tc, GroupSet::ALL).unwrap();
    }
    let after = eval_loss(&params);
    assert!(after < before * 0.8, "loss {before} -> {after}");
}

#[test]
fn zero_output_layer_scores_one_third_on_balanced_data() {
    let config = tiny_config();
    let words: Vec<String> = (0..18).map(|i| format!("w{i}")).collect();
    let vocab =
        Vocabulary::from_tokens(["<pad>", "<unk>"].iter().map(|s| s.to_string()).chain(words.clone()).collect())
            .unwrap();
    let mut params = ModelParams::<f32>::init(&config, &mut Rng::new(4)).unwrap();
    params.output_weight.fill(0.0);
    params.output_bias.fill(0.0);
    let model = Classifier::new(config, vocab, params).unwrap();
    let data: Vec<LabeledExample> = (0..30)
        .map(|i| LabeledExample::new(format!("{} {}", words[i % 18], words[(i * 7) % 18]), SentimentLabel::ALL[i % 3]))
        .collect();
    let p = model.predict("w1 w2").unwrap();
    assert!(p.probs.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-6));
    assert_eq!(p.label, SentimentLabel::Negative, "ties go to the lowest index");
    assert!((evaluate_accuracy(&model, &data).unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn zero_epoch_budget_returns_input_unchanged() {
    let config = tiny_config();
    let params = ModelParams::<f32>::init(&config, &mut Rng::new(5)).unwrap();
    let tc = TrainConfig { max_epochs: 0, ..quick() };
    let (out, trace) = chain_thaw_train(&params, &config, &dataset(8, 1), &dataset(4, 2), &tc, &mut Rng::new(0)).unwrap();
    assert!(trace.records.is_empty());
    for g in LayerGroup::ALL {
        assert!(out.group_bits_equal(&params, g));
    }
}

#[test]
fn training_is_deterministic_and_exec_independent() {
    let config = tiny_config();
    let params = ModelParams::<f32>::init(&config, &mut Rng::new(6)).unwrap();
    let (train, val) = (dataset(40, 7), dataset(10, 8));
    let run = |exec| {
        let tc = TrainConfig { exec, ..quick() };
        chain_thaw_train(&params, &config, &train, &val, &tc, &mut Rng::new(9)).unwrap()
    };
    let (a, ta) = run(Exec::Sequential);
    let (b, tb) = run(Exec::Parallel);
    let (c, _) = run(Exec::Sequential);
    assert_eq!(ta, tb);
    for g in LayerGroup::ALL {
        assert!(a.group_bits_equal(&b, g), "{g}");
        assert!(a.group_bits_equal(&c, g), "{g}");
    }
}

#[test]
fn frozen_groups_stay_bit_identical() {
    let config = tiny_config();
    let params = ModelParams::<f32>::init(&config, &mut Rng::new(10)).unwrap();
    let active = GroupSet::only(LayerGroup::Lstm1).with(LayerGroup::Output);
    let (out, _) = fit_until_converged(&params, &config, &dataset(24, 11), &dataset(8, 12), active, &quick(), &mut Rng::new(1), "p")
        .unwrap();
    for g in LayerGroup::ALL {
        assert_eq!(out.group_bits_equal(&params, g), !active.contains(g), "{g}");
    }
}

#[test]
fn overfits_thirty_two_examples() {
    let config = tiny_config();
    let data = dataset(32, 13);
    let params = ModelParams::<f32>::init(&config, &mut Rng::new(14)).unwrap();
    let tc = TrainConfig { max_epochs: 200, patience: 200, ..quick() };
    let (_, trace) = fit_until_converged(&params, &config, &data, &data, GroupSet::ALL, &tc, &mut Rng::new(2), "fit").unwrap();
    assert!(trace.records.iter().any(|r| r.val_accuracy == 1.0));
}
