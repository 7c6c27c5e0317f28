use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use super::{adam_step, AdamState, TrainConfig};
use crate::model::{argmax, forward_example, loss_and_grad, GroupSet, ModelConfig, ModelParams};
use crate::numcore::{Exec, Mode, Real, Rng};
use crate::textpipe::{write_jsonl, EncodedExample};
use crate::{ensure_contract, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub phase: String,
    /// 1-based within the phase.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    /// Set on the last epoch of a phase when the returned weights come from
    /// an earlier epoch.
    pub reloaded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn extend(&mut self, other: TrainTrace) {
        self.records.extend(other.records);
    }

    /// Distinct phase labels in order of first appearance.
    pub fn phases(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.phase.as_str()) {
                out.push(&r.phase);
            }
        }
        out
    }

    pub fn best_accuracy(&self, phase: &str) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.phase == phase)
            .map(|r| r.val_accuracy)
            .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        write_jsonl(path, &self.records)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOutcome {
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Validation-accuracy early stopping. Runs `epoch` until `patience`
/// consecutive epochs fail to beat the best accuracy (strictly) or
/// `max_epochs` is reached, snapshotting `state` at every new best, and
/// returns the best snapshot. With `max_epochs == 0` the state is returned
/// unchanged.
pub fn run_until_converged<S: Clone>(
    state: &mut S,
    max_epochs: usize,
    patience: usize,
    phase: &str,
    mut epoch: impl FnMut(&mut S, usize) -> Result<EpochOutcome>,
) -> Result<(S, TrainTrace)> {
    ensure_contract!(patience >= 1, "patience must be at least 1");
    let mut best: Option<(f64, usize, S)> = None;
    let mut since_best = 0;
    let mut trace = TrainTrace::default();
    for e in 1..=max_epochs {
        let out = epoch(state, e)?;
        trace.records.push(EpochRecord {
            phase: phase.to_string(),
            epoch: e,
            train_loss: out.train_loss,
            val_accuracy: out.val_accuracy,
            reloaded: false,
        });
        match &best {
            Some((acc, _, _)) if out.val_accuracy <= *acc => {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
            _ => {
                best = Some((out.val_accuracy, e, state.clone()));
                since_best = 0;
            }
        }
    }
    match best {
        None => Ok((state.clone(), trace)),
        Some((_, best_epoch, snapshot)) => {
            if let Some(last) = trace.records.last_mut() {
                last.reloaded = last.epoch != best_epoch;
            }
            Ok((snapshot, trace))
        }
    }
}

/// Fraction of `data` whose eval-mode argmax equals its label.
pub fn accuracy_encoded<T: Real>(
    exec: Exec,
    params: &ModelParams<T>,
    config: &ModelConfig,
    data: &[EncodedExample],
) -> Result<f64> {
    ensure_contract!(!data.is_empty(), "accuracy of an empty dataset");
    let hits = exec
        .map_ordered(data, |_, ex| -> Result<bool> {
            let cache = forward_example(ex, params, config, Mode::Eval, &mut Rng::new(0))?;
            Ok(ex.label.map(|l| l.index()) == Some(argmax(&cache.probs)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / data.len() as f64)
}

/// Trains the groups in `active` with Adam until validation accuracy stops
/// improving, and returns the best-validation weights.
#[allow(clippy::too_many_arguments)]
pub fn fit_until_converged<T: Real>(
    params: &ModelParams<T>,
    model_config: &ModelConfig,
    train: &[EncodedExample],
    val: &[EncodedExample],
    active: GroupSet,
    config: &TrainConfig,
    rng: &mut Rng,
    phase: &str,
) -> Result<(ModelParams<T>, TrainTrace)> {
    config.validate()?;
    ensure_contract!(!train.is_empty(), "empty training set");
    ensure_contract!(!val.is_empty(), "empty validation set");
    let mut adam = AdamState::new(params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut current = params.clone();
    let (best, trace) = run_until_converged(
        &mut current,
        config.max_epochs,
        config.patience,
        phase,
        |p, epoch| {
            rng.shuffle(&mut order);
            let mut loss_sum = 0.0;
            let mut batch = Vec::with_capacity(config.batch_size);
            for chunk in order.chunks(config.batch_size) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| train[i].clone()));
                let (loss, grads) =
                    loss_and_grad(config.exec, &batch, p, model_config, Mode::Train, rng, active)?;
                adam_step(p, &grads, &mut adam, config, active)?;
                loss_sum += loss.as_f64() * chunk.len() as f64;
            }
            let out = EpochOutcome {
                train_loss: loss_sum / train.len() as f64,
                val_accuracy: accuracy_encoded(config.exec, p, model_config, val)?,
            };
            info!(
                "[{phase}] epoch {epoch}: loss {:.4}, val acc {:.4}",
                out.train_loss, out.val_accuracy
            );
            Ok(out)
        },
    )?;
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scripted(accs: &[f64], patience: usize, max_epochs: usize) -> (usize, TrainTrace) {
        let mut weights = 0usize;
        run_until_converged(&mut weights, max_epochs, patience, "p", |w, e| {
            *w = e;
            Ok(EpochOutcome {
                train_loss: 0.0,
                val_accuracy: accs[e - 1],
            })
        })
        .unwrap()
    }

    #[test]
    fn stops_after_patience_and_reloads_best() {
        let (w, trace) = scripted(&[0.5, 0.7, 0.65, 0.66, 0.9], 2, 10);
        assert_eq!(trace.records.len(), 4);
        assert_eq!(w, 2);
        assert_eq!(trace.best_accuracy("p"), Some(0.7));
        assert!(trace.records[3].reloaded);
    }

    #[test]
    fn strictly_improving_runs_to_budget() {
        let (w, trace) = scripted(&[0.1, 0.2, 0.3, 0.4], 1, 4);
        assert_eq!((w, trace.records.len()), (4, 4));
        assert!(!trace.records[3].reloaded);
    }

    #[test]
    fn patience_one_first_best() {
        let (w, trace) = scripted(&[0.8, 0.6, 0.9], 1, 3);
        assert_eq!((w, trace.records.len()), (1, 2));
    }

    #[test]
    fn ties_do_not_count_as_improvement() {
        let (w, trace) = scripted(&[0.5, 0.5, 0.5], 2, 3);
        assert_eq!((w, trace.records.len()), (1, 3));
    }

    #[test]
    fn zero_budget_returns_input() {
        let mut w = 7usize;
        let (out, trace) = run_until_converged(&mut w, 0, 3, "p", |_, _| unreachable!()).unwrap();
        assert_eq!(out, 7);
        assert!(trace.records.is_empty());
    }
}
