//! Sentiment classification with a BiLSTM-attention network trained from
//! scratch, chain-thaw fine-tuning, and teacher/student pseudolabel training.
//!
//! Module map:
//!
//! * [`numcore`]: dense matrices, elementwise primitives, dropout, a seeded
//!   generator and a finite-difference gradient checker.
//! * [`textpipe`]: tokenizer, vocabulary, padded encoding, dataset loaders.
//! * [`model`]: the network, its hand-written backward pass, and the binary
//!   model file format.
//! * [`training`]: Adam, early stopping with best-weight reload, chain-thaw.
//! * [`selftrain`]: pseudolabelling, student datasets and training, and the
//!   teacher/student comparison report.

mod error;

pub mod model;
pub mod numcore;
pub mod selftrain;
pub mod textpipe;
pub mod training;

pub use error::{Error, Result};
pub(crate) use error::ensure_contract;
