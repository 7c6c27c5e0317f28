use std::collections::HashMap;

use crate::{ensure_contract, Error, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

/// Token ↔ id map with PAD at 0 and UNK at 1. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Tokens with count ≥ `min_freq`, most frequent first (ties in
    /// lexicographic order), truncated so the total size is ≤ `max_size`.
    pub fn build<I, S>(corpus: I, min_freq: usize, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        ensure_contract!(min_freq >= 1, "min_freq must be at least 1");
        ensure_contract!(max_size >= 2, "max_size must leave room for PAD and UNK");
        let mut counts: HashMap<String, usize> = HashMap::new();
        for seq in corpus {
            for tok in seq.as_ref() {
                if let Some(c) = counts.get_mut(tok.as_str()) {
                    *c += 1;
                } else {
                    counts.insert(tok.clone(), 1);
                }
            }
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_freq && t != PAD && t != UNK)
            .collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size - 2);
        Self::from_tokens(
            [PAD.to_string(), UNK.to_string()]
                .into_iter()
                .chain(ranked.into_iter().map(|(t, _)| t))
                .collect(),
        )
    }

    /// Rebuilds from tokens in id order (as stored in a model file).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != PAD || tokens[1] != UNK {
            return Err(Error::Invalid(
                "vocabulary must start with the PAD and UNK tokens".into(),
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Id of `token`, or UNK.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
