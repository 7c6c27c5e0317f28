//! Text preprocessing and dataset ingestion.

mod encode;
mod io;
mod label;
mod split;
mod tokenize;
mod vocab;

pub use encode::{encode, encode_text, EncodedExample};
pub use io::{
    load_jsonl, load_sentiment140_csv, open_unlabeled_jsonl, read_labeled_jsonl,
    read_sentiment140_csv, read_unlabeled_jsonl, write_jsonl, JsonlWriter, UnlabeledDoc,
};
pub use label::{LabeledExample, SentimentLabel};
pub use split::{split, split_labeled};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, PAD, PAD_ID, UNK, UNK_ID};

/// Default sequence length.
pub const DEFAULT_MAX_LEN: usize = 64;
pub const DEFAULT_MIN_FREQ: usize = 2;
pub const DEFAULT_MAX_VOCAB: usize = 50_000;
