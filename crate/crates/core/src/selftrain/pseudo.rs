use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::Classifier;
use crate::numcore::{Exec, Real};
use crate::textpipe::{LabeledExample, SentimentLabel, UnlabeledDoc};
use crate::{ensure_contract, Error, Result};

/// A teacher's hard label for one unannotated document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelRecord {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub text: String,
    pub label: SentimentLabel,
    /// Teacher probability of `label` (the row maximum).
    pub confidence: f64,
}

impl From<PseudoLabelRecord> for LabeledExample {
    fn from(r: PseudoLabelRecord) -> Self {
        LabeledExample {
            text: r.text,
            label: r.label,
        }
    }
}

/// Streaming pseudolabeller: reads `batch_size` documents at a time, labels
/// them with the teacher in eval mode, and yields records in input order.
/// Memory is bounded by one batch.
pub struct Pseudolabeler<'a, T, I> {
    teacher: &'a Classifier<T>,
    docs: I,
    batch_size: usize,
    threshold: Option<f64>,
    exec: Exec,
    ready: VecDeque<PseudoLabelRecord>,
    next_index: usize,
    failed: bool,
}

impl<'a, T, I> Pseudolabeler<'a, T, I>
where
    T: Real,
    I: Iterator<Item = Result<UnlabeledDoc>>,
{
    fn refill(&mut self) -> Result<()> {
        let mut batch = Vec::with_capacity(self.batch_size);
        while batch.len() < self.batch_size {
            match self.docs.next() {
                None => break,
                Some(Ok(doc)) => batch.push(doc),
                Some(Err(e)) => {
                    return Err(Error::Invalid(format!(
                        "reading unlabeled document {}: {e}",
                        self.next_index + batch.len()
                    )))
                }
            }
        }
        self.next_index += batch.len();
        let preds = self.teacher.predict_batch(self.exec, &batch.iter().map(|d| d.text.as_str()).collect::<Vec<_>>())?;
        for (doc, p) in batch.into_iter().zip(preds) {
            let confidence = p.confidence();
            if self.threshold.is_some_and(|t| confidence < t) {
                continue;
            }
            self.ready.push_back(PseudoLabelRecord {
                doc_id: doc.id,
                text: doc.text,
                label: p.label,
                confidence,
            });
        }
        Ok(())
    }
}

impl<'a, T, I> Iterator for Pseudolabeler<'a, T, I>
where
    T: Real,
    I: Iterator<Item = Result<UnlabeledDoc>>,
{
    type Item = Result<PseudoLabelRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(r) = self.ready.pop_front() {
                return Some(Ok(r));
            }
            if self.failed {
                return None;
            }
            let before = self.next_index;
            if let Err(e) = self.refill() {
                self.failed = true;
                return Some(Err(e));
            }
            if self.ready.is_empty() && self.next_index == before {
                return None;
            }
        }
    }
}

/// Labels `docs` with `teacher`, dropping records whose confidence is below
/// `threshold` when one is given.
pub fn pseudolabel_corpus<T, I>(
    teacher: &Classifier<T>,
    docs: I,
    batch_size: usize,
    threshold: Option<f64>,
    exec: Exec,
) -> Result<Pseudolabeler<'_, T, I::IntoIter>>
where
    T: Real,
    I: IntoIterator<Item = Result<UnlabeledDoc>>,
{
    ensure_contract!(batch_size >= 1, "pseudolabel batch size must be at least 1");
    if let Some(t) = threshold {
        ensure_contract!(t > 0.0 && t <= 1.0, "confidence threshold {t} not in (0, 1]");
    }
    Ok(Pseudolabeler {
        teacher,
        docs: docs.into_iter(),
        batch_size,
        threshold,
        exec,
        ready: VecDeque::new(),
        next_index: 0,
        failed: false,
    })
}
