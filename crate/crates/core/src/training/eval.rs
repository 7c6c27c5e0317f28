use crate::model::Classifier;
use crate::numcore::{Exec, Real};
use crate::textpipe::LabeledExample;
use crate::{Error, Result};

/// Fraction of `data` where `predict` returns the gold label.
pub fn evaluate_accuracy<T: Real>(model: &Classifier<T>, data: &[LabeledExample]) -> Result<f64> {
    evaluate_accuracy_with(Exec::default(), model, data)
}

pub fn evaluate_accuracy_with<T: Real>(
    exec: Exec,
    model: &Classifier<T>,
    data: &[LabeledExample],
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Invalid("cannot evaluate on an empty dataset".into()));
    }
    let hits = exec
        .map_ordered(data, |_, ex| model.predict(&ex.text).map(|p| p.label == ex.label))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / data.len() as f64)
}
