use log::info;
use serde::{Deserialize, Serialize};

use super::{fit_until_converged, TrainConfig, TrainTrace};
use crate::model::{GroupSet, LayerGroup, ModelConfig, ModelParams};
use crate::numcore::{Real, Rng};
use crate::textpipe::EncodedExample;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub label: String,
    pub groups: GroupSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub phases: Vec<Phase>,
}

impl PhasePlan {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Union of all phase sets.
    pub fn coverage(&self) -> GroupSet {
        self.phases
            .iter()
            .fold(GroupSet::EMPTY, |acc, p| acc.union(p.groups))
    }

    /// A single phase training every group.
    pub fn all_at_once() -> Self {
        PhasePlan {
            phases: vec![Phase {
                label: "all".into(),
                groups: GroupSet::ALL,
            }],
        }
    }
}

/// New (output) layer first, then every layer alone from the input side,
/// then everything together.
pub fn chain_thaw_plan(order: &[LayerGroup]) -> Result<PhasePlan> {
    if order != LayerGroup::ALL {
        return Err(Error::Invalid(format!(
            "chain-thaw expects groups in network order {:?}, got {order:?}",
            LayerGroup::ALL
        )));
    }
    let new_layer = *order.last().unwrap();
    let mut phases = vec![Phase {
        label: format!("1:{new_layer}"),
        groups: GroupSet::only(new_layer),
    }];
    for &g in order {
        phases.push(Phase {
            label: format!("{}:{g}", phases.len() + 1),
            groups: GroupSet::only(g),
        });
    }
    phases.push(Phase {
        label: format!("{}:all", phases.len() + 1),
        groups: order.iter().copied().collect(),
    });
    Ok(PhasePlan { phases })
}

/// Runs [`fit_until_converged`] once per phase, carrying the best weights
/// forward. Each phase starts with fresh optimizer moments.
pub fn train_with_plan<T: Real>(
    params: &ModelParams<T>,
    model_config: &ModelConfig,
    train: &[EncodedExample],
    val: &[EncodedExample],
    plan: &PhasePlan,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(ModelParams<T>, TrainTrace)> {
    let mut current = params.clone();
    let mut trace = TrainTrace::default();
    for phase in &plan.phases {
        info!("phase {} ({})", phase.label, phase.groups);
        let (best, t) = fit_until_converged(
            &current,
            model_config,
            train,
            val,
            phase.groups,
            config,
            rng,
            &phase.label,
        )?;
        current = best;
        trace.extend(t);
    }
    Ok((current, trace))
}

pub fn chain_thaw_train<T: Real>(
    params: &ModelParams<T>,
    model_config: &ModelConfig,
    train: &[EncodedExample],
    val: &[EncodedExample],
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(ModelParams<T>, TrainTrace)> {
    let plan = chain_thaw_plan(&LayerGroup::ALL)?;
    train_with_plan(params, model_config, train, val, &plan, config, rng)
}
