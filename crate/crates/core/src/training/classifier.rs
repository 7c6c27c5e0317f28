use super::{train_with_plan, PhasePlan, TrainConfig, TrainTrace};
use crate::model::Classifier;
use crate::numcore::{Real, Rng};
use crate::textpipe::{EncodedExample, LabeledExample};
use crate::Result;

pub fn encode_labeled<T: Real>(
    model: &Classifier<T>,
    data: &[LabeledExample],
) -> Result<Vec<EncodedExample>> {
    data.iter()
        .map(|ex| model.encode(&ex.text, Some(ex.label)))
        .collect()
}

/// Encodes with the model's vocabulary and trains it through `plan`.
pub fn train_classifier<T: Real>(
    model: &Classifier<T>,
    train: &[LabeledExample],
    val: &[LabeledExample],
    plan: &PhasePlan,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(Classifier<T>, TrainTrace)> {
    let train = encode_labeled(model, train)?;
    let val = encode_labeled(model, val)?;
    let (params, trace) =
        train_with_plan(&model.params, &model.config, &train, &val, plan, config, rng)?;
    Ok((
        Classifier {
            config: model.config.clone(),
            vocab: model.vocab.clone(),
            params,
        },
        trace,
    ))
}
