use super::{tokenize, SentimentLabel, Vocabulary, PAD_ID, UNK_ID};
use crate::{ensure_contract, Result};

/// Fixed-length id sequence with a prefix mask (1 for real tokens, then 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub token_ids: Vec<u32>,
    pub mask: Vec<u8>,
    pub label: Option<SentimentLabel>,
}

impl EncodedExample {
    /// Number of real (unmasked) positions.
    pub fn real_len(&self) -> usize {
        self.mask.iter().take_while(|&&m| m == 1).count()
    }

    pub fn max_len(&self) -> usize {
        self.token_ids.len()
    }

    /// Checks the prefix-mask invariant and returns the real length.
    pub(crate) fn checked_real_len(&self) -> Result<usize> {
        ensure_contract!(
            self.token_ids.len() == self.mask.len(),
            "encoded example: {} ids but {} mask entries",
            self.token_ids.len(),
            self.mask.len()
        );
        let n = self.real_len();
        ensure_contract!(n >= 1, "encoded example has no unmasked position");
        ensure_contract!(
            self.mask[n..].iter().all(|&m| m == 0),
            "mask must be ones followed by zeros"
        );
        Ok(n)
    }
}

/// Maps tokens to ids (OOV → UNK), truncating or right-padding to `max_len`.
/// An empty sequence becomes a single UNK.
pub fn encode(
    tokens: &[String],
    vocab: &Vocabulary,
    max_len: usize,
    label: Option<SentimentLabel>,
) -> Result<EncodedExample> {
    ensure_contract!(max_len >= 1, "max_len must be at least 1");
    let mut token_ids = vec![PAD_ID; max_len];
    let mut mask = vec![0u8; max_len];
    if tokens.is_empty() {
        token_ids[0] = UNK_ID;
        mask[0] = 1;
    } else {
        for (i, t) in tokens.iter().take(max_len).enumerate() {
            token_ids[i] = vocab.id(t);
            mask[i] = 1;
        }
    }
    Ok(EncodedExample {
        token_ids,
        mask,
        label,
    })
}

/// `tokenize` then `encode`.
pub fn encode_text(
    text: &str,
    vocab: &Vocabulary,
    max_len: usize,
    label: Option<SentimentLabel>,
) -> Result<EncodedExample> {
    encode(&tokenize(text), vocab, max_len, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build([vec!["a".to_string(), "a".into(), "b".into()]], 1, 10).unwrap()
    }

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pads_to_max_len() {
        let e = encode(&toks(&["a", "b"]), &vocab(), 5, None).unwrap();
        assert_eq!(e.token_ids, [2, 3, 0, 0, 0]);
        assert_eq!(e.mask, [1, 1, 0, 0, 0]);
        assert_eq!(e.real_len(), 2);
    }

    #[test]
    fn oov_is_unk() {
        let e = encode(&toks(&["zzz"]), &vocab(), 3, None).unwrap();
        assert_eq!(e.token_ids[0], UNK_ID);
    }

    #[test]
    fn truncates() {
        let t: Vec<String> = (0..10).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string()).collect();
        let e = encode(&t, &vocab(), 5, None).unwrap();
        assert_eq!(e.token_ids, [2, 3, 2, 3, 2]);
        assert_eq!(e.mask, [1; 5]);
    }

    #[test]
    fn empty_becomes_unk() {
        let e = encode(&[], &vocab(), 4, None).unwrap();
        assert_eq!(e.token_ids, [UNK_ID, 0, 0, 0]);
        assert_eq!(e.mask, [1, 0, 0, 0]);
        assert!(encode(&[], &vocab(), 0, None).is_err());
    }

    #[test]
    fn checked_real_len_rejects_bad_masks() {
        let mut e = encode(&toks(&["a"]), &vocab(), 3, None).unwrap();
        assert_eq!(e.checked_real_len().unwrap(), 1);
        e.mask = vec![1, 0, 1];
        assert!(e.checked_real_len().is_err());
        e.mask = vec![0, 0, 0];
        assert!(e.checked_real_len().is_err());
    }
}
