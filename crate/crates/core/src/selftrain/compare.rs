use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::Classifier;
use crate::numcore::{Exec, Real};
use crate::textpipe::LabeledExample;
use crate::training::evaluate_accuracy_with;
use crate::{ensure_contract, Result};

/// One dataset's accuracies, aligned with [`EvalReport::models`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub accuracies: Vec<f64>,
}

/// Accuracy of several models on several datasets.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub models: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    /// Free-form remarks appended below the table.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Formats a fraction as a percentage with two decimals, e.g. `68.87%`.
pub fn format_percent(accuracy: f64) -> String {
    format!("{:.2}%", accuracy * 100.0)
}

impl EvalReport {
    pub fn new(models: Vec<String>, rows: Vec<ComparisonRow>) -> Result<Self> {
        for row in &rows {
            ensure_contract!(
                row.accuracies.len() == models.len(),
                "row '{}' has {} accuracies for {} models",
                row.dataset,
                row.accuracies.len(),
                models.len()
            );
            for &a in &row.accuracies {
                ensure_contract!((0.0..=1.0).contains(&a), "accuracy {a} outside [0, 1]");
            }
        }
        Ok(EvalReport {
            models,
            rows,
            notes: Vec::new(),
        })
    }

    pub fn accuracy(&self, model: &str, dataset: &str) -> Option<f64> {
        let m = self.models.iter().position(|n| n == model)?;
        let row = self.rows.iter().find(|r| r.dataset == dataset)?;
        row.accuracies.get(m).copied()
    }

    /// Markdown table: one row per dataset, one `Accuracy of <model>` column
    /// per model, bold header and dataset names.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| **Dataset Name** |");
        for m in &self.models {
            let _ = write!(out, " **Accuracy of {m}** |");
        }
        out.push_str("\n|---|");
        for _ in &self.models {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "| **{}** |", row.dataset);
            for &a in &row.accuracies {
                let _ = write!(out, " {} |", format_percent(a));
            }
            out.push('\n');
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                let _ = writeln!(out, "{n}");
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| crate::Error::Invalid(format!("bad report JSON: {e}")))
    }
}

/// Evaluates every model on every dataset. Rows follow the dataset order.
pub fn compare_models<T: Real>(
    models: &[(&str, &Classifier<T>)],
    datasets: &[(&str, &[LabeledExample])],
    exec: Exec,
) -> Result<EvalReport> {
    ensure_contract!(!models.is_empty(), "compare_models needs at least one model");
    let mut rows = Vec::with_capacity(datasets.len());
    for (name, data) in datasets {
        ensure_contract!(!data.is_empty(), "evaluation dataset '{name}' is empty");
        let accuracies = models
            .iter()
            .map(|(_, m)| evaluate_accuracy_with(exec, m, data))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ComparisonRow {
            dataset: name.to_string(),
            accuracies,
        });
    }
    EvalReport::new(models.iter().map(|(n, _)| n.to_string()).collect(), rows)
}
