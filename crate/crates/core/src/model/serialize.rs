//! Binary model file:
//!
//! ```text
//! "PFRG" | version u8 (=1)
//! vocab_size, embed_dim, lstm_hidden_per_dir, num_classes, max_len : u32 LE
//! embed_dropout_p, final_dropout_p : f64 LE
//! token count u32, then per token: byte length u32 + UTF-8 bytes (id order)
//! per group (embed, lstm0, lstm1, attention, output):
//!     tensor count u32, then per tensor: rows u32, cols u32, values f32 LE
//! FNV-1a 64 checksum of every preceding byte : u64 LE
//! ```

use std::fs;
use std::path::Path;

use super::{Classifier, LayerGroup, ModelConfig, ModelParams};
use crate::numcore::{Real, Tensor2};
use crate::textpipe::Vocabulary;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PFRG";
pub const FORMAT_VERSION: u8 = 1;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v)
        .map_err(|_| Error::ModelFormat(format!("value {v} does not fit in 32 bits")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

/// Encodes a classifier; values are stored as `f32`.
pub fn encode_model<T: Real>(model: &Classifier<T>) -> Result<Vec<u8>> {
    let c = &model.config;
    let mut out = Vec::with_capacity(16 + 4 * model.params.num_params());
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    for v in [
        c.vocab_size,
        c.embed_dim,
        c.lstm_hidden_per_dir,
        c.num_classes,
        c.max_len,
    ] {
        put_u32(&mut out, v)?;
    }
    out.extend_from_slice(&c.embed_dropout_p.to_le_bytes());
    out.extend_from_slice(&c.final_dropout_p.to_le_bytes());
    put_u32(&mut out, model.vocab.len())?;
    for tok in model.vocab.tokens() {
        put_u32(&mut out, tok.len())?;
        out.extend_from_slice(tok.as_bytes());
    }
    for g in LayerGroup::ALL {
        let tensors = model.params.group(g);
        put_u32(&mut out, tensors.len())?;
        for t in tensors {
            put_u32(&mut out, t.rows())?;
            put_u32(&mut out, t.cols())?;
            for v in t.data() {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            }
        }
    }
    let sum = fnv1a64(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::ModelFormat(format!(
                "truncated model file while reading {what}"
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Classifier<f32>> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic bytes)".into()));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model format version: expected {FORMAT_VERSION}, found {}",
            bytes[4]
        )));
    }
    if bytes.len() < 5 + 8 {
        return Err(Error::ModelFormat("truncated model file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a64(body) != stored {
        return Err(Error::ModelFormat(
            "checksum mismatch: model file is truncated or corrupted".into(),
        ));
    }
    let mut cur = Cursor { buf: body, pos: 5 };
    let config = ModelConfig {
        vocab_size: cur.u32("config")?,
        embed_dim: cur.u32("config")?,
        lstm_hidden_per_dir: cur.u32("config")?,
        num_classes: cur.u32("config")?,
        max_len: cur.u32("config")?,
        embed_dropout_p: cur.f64("config")?,
        final_dropout_p: cur.f64("config")?,
    };
    config
        .validate()
        .map_err(|e| Error::ModelFormat(format!("bad config in model file: {e}")))?;
    let n_tokens = cur.u32("vocabulary")?;
    if n_tokens != config.vocab_size {
        return Err(Error::ModelFormat(format!(
            "vocabulary holds {n_tokens} tokens but config says {}",
            config.vocab_size
        )));
    }
    let mut tokens = Vec::with_capacity(n_tokens);
    for _ in 0..n_tokens {
        let len = cur.u32("vocabulary")?;
        let raw = cur.take(len, "vocabulary")?;
        let tok = std::str::from_utf8(raw)
            .map_err(|_| Error::ModelFormat("vocabulary token is not UTF-8".into()))?;
        tokens.push(tok.to_string());
    }
    let vocab = Vocabulary::from_tokens(tokens)
        .map_err(|e| Error::ModelFormat(format!("bad vocabulary in model file: {e}")))?;

    let mut params: ModelParams<f32> = ModelParams::zeros(&config);
    for g in LayerGroup::ALL {
        let what = format!("{g} weights");
        let count = cur.u32(&what)?;
        let mut slots = params.group_mut(g);
        if count != slots.len() {
            return Err(Error::ModelFormat(format!(
                "{g}: expected {} tensors, found {count}",
                slots.len()
            )));
        }
        for slot in slots.iter_mut() {
            let rows = cur.u32(&what)?;
            let cols = cur.u32(&what)?;
            if (rows, cols) != slot.shape() {
                return Err(Error::ModelFormat(format!(
                    "{g}: tensor shape {rows}x{cols} does not match config {:?}",
                    slot.shape()
                )));
            }
            let raw = cur.take(4 * rows * cols, &what)?;
            let data: Vec<f32> = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            **slot = Tensor2::from_vec(rows, cols, data)
                .map_err(|e| Error::ModelFormat(format!("{g}: {e}")))?;
        }
    }
    if cur.pos != body.len() {
        return Err(Error::ModelFormat(format!(
            "{} unexpected trailing bytes in model file",
            body.len() - cur.pos
        )));
    }
    Classifier::new(config, vocab, params)
}

/// Writes through a temporary file and renames, so readers never observe a
/// half-written model.
pub fn save_model<T: Real>(model: &Classifier<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_model(model)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Classifier<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes).map_err(|e| match e {
        Error::ModelFormat(m) => Error::ModelFormat(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Rng;

    fn model() -> Classifier<f32> {
        let vocab = Vocabulary::build(
            [["good", "bad", "ok", "good"].map(String::from).to_vec()],
            1,
            100,
        )
        .unwrap();
        let config = ModelConfig {
            embed_dim: 4,
            lstm_hidden_per_dir: 3,
            max_len: 6,
            ..Default::default()
        };
        Classifier::init(config, vocab, &mut Rng::new(8)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let back = decode_model(&encode_model(&m).unwrap()).unwrap();
        assert_eq!(back.config, m.config);
        assert_eq!(back.vocab, m.vocab);
        for g in LayerGroup::ALL {
            assert!(back.params.group_bits_equal(&m.params, g));
        }
    }

    #[test]
    fn bad_magic() {
        let mut b = encode_model(&model()).unwrap();
        b[0] = b'X';
        assert!(decode_model(&b).unwrap_err().to_string().contains("not a model file"));
    }

    #[test]
    fn bumped_version() {
        let mut b = encode_model(&model()).unwrap();
        b[4] = 2;
        let msg = decode_model(&b).unwrap_err().to_string();
        assert!(msg.contains("expected 1, found 2"), "{msg}");
    }

    #[test]
    fn truncated_and_flipped() {
        let b = encode_model(&model()).unwrap();
        let msg = decode_model(&b[..b.len() - 20]).unwrap_err().to_string();
        assert!(msg.contains("checksum"), "{msg}");
        let mut c = b.clone();
        let mid = c.len() / 2;
        c[mid] ^= 0x40;
        assert!(decode_model(&c).unwrap_err().to_string().contains("corrupted"));
        assert!(decode_model(b"PF").is_err());
    }
}
