use super::attention::{attention_backward, attention_forward, AttentionCache};
use super::embed::{embed_backward, embed_forward, EmbedCache};
use super::lstm::{bilstm_backward, bilstm_forward, BiLstmCache};
use super::{GroupSet, LayerGroup, ModelConfig, ModelParams};
use crate::numcore::{
    cross_entropy, dropout, mat_vec_acc, outer_acc, softmax_in_place, vec_mat_acc, DropoutStyle,
    Exec, Mode, Real, Rng, Tensor2,
};
use crate::textpipe::{encode_text, EncodedExample, SentimentLabel, Vocabulary};
use crate::{ensure_contract, Error, Result};

/// Examples per gradient accumulator. Fixed so that the reduction order (and
/// therefore every bit of the summed gradient) does not depend on how many
/// threads run the batch.
const GRAD_CHUNK: usize = 8;

/// Everything one example's backward pass needs.
#[derive(Debug, Clone)]
pub struct ExampleCache<T> {
    pub real_len: usize,
    pub embed: EmbedCache<T>,
    /// Embeddings after channel dropout, max_len × E.
    pub embed_out: Tensor2<T>,
    pub lstm0: BiLstmCache<T>,
    pub lstm0_out: Tensor2<T>,
    pub lstm1: BiLstmCache<T>,
    pub lstm1_out: Tensor2<T>,
    pub attention: AttentionCache<T>,
    /// max_len weights, zero on padding.
    pub attention_weights: Vec<T>,
    pub pooled: Vec<T>,
    pub final_mask: Vec<T>,
    pub final_scale: T,
    /// Pooled vector after the final dropout; input of the output layer.
    pub dropped: Vec<T>,
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub examples: Vec<ExampleCache<T>>,
}

impl<T: Real> ForwardCache<T> {
    pub fn logits(&self) -> Tensor2<T> {
        stack(self.examples.iter().map(|e| &e.logits[..]))
    }

    pub fn probs(&self) -> Tensor2<T> {
        stack(self.examples.iter().map(|e| &e.probs[..]))
    }
}

fn stack<'a, T: Real>(rows: impl Iterator<Item = &'a [T]>) -> Tensor2<T> {
    let rows: Vec<&[T]> = rows.collect();
    Tensor2::from_rows(&rows)
}

/// Per-example generators for a train-mode batch; eval mode draws nothing.
fn example_rngs(n: usize, mode: Mode, rng: &mut Rng) -> Vec<Rng> {
    match mode {
        Mode::Eval => vec![Rng::new(0); n],
        Mode::Train => {
            let base = Rng::new(rng.next_u64());
            (0..n as u64).map(|i| base.fork(i)).collect()
        }
    }
}

pub fn forward_example<T: Real>(
    ex: &EncodedExample,
    params: &ModelParams<T>,
    config: &ModelConfig,
    mode: Mode,
    rng: &mut Rng,
) -> Result<ExampleCache<T>> {
    let real_len = ex.checked_real_len()?;
    let (embed_out, embed) =
        embed_forward(&ex.token_ids, &params.embed, config.embed_dropout_p, mode, rng)?;
    let (lstm0_out, lstm0) = bilstm_forward(&embed_out, real_len, &params.lstm0)?;
    let (lstm1_out, lstm1) = bilstm_forward(&lstm0_out, real_len, &params.lstm1)?;
    let (pooled, attention_weights, attention) =
        attention_forward(&embed_out, &lstm0_out, &lstm1_out, real_len, &params.attention)?;

    let pooled_t = Tensor2::from_vec(1, pooled.len(), pooled.clone())?;
    let (dropped, mask) = dropout(
        &pooled_t,
        config.final_dropout_p,
        mode,
        rng,
        DropoutStyle::Element,
    )?;
    let final_scale = if mode == Mode::Train && config.final_dropout_p > 0.0 {
        T::of(1.0 / (1.0 - config.final_dropout_p))
    } else {
        T::one()
    };
    let dropped = dropped.into_vec();
    ensure_contract!(
        params.output_weight.rows() == dropped.len(),
        "output layer expects {} features, attention produced {}",
        params.output_weight.rows(),
        dropped.len()
    );
    let mut logits = params.output_bias.data().to_vec();
    vec_mat_acc(&dropped, &params.output_weight, &mut logits);
    let mut probs = logits.clone();
    softmax_in_place(&mut probs);
    Ok(ExampleCache {
        real_len,
        embed,
        embed_out,
        lstm0,
        lstm0_out,
        lstm1,
        lstm1_out,
        attention,
        attention_weights,
        pooled,
        final_mask: mask.into_vec(),
        final_scale,
        dropped,
        logits,
        probs,
    })
}

/// Accumulates one example's parameter gradients for the groups in `groups`.
/// Backprop stops at the lowest requested group.
pub fn backward_example<T: Real>(
    cache: &ExampleCache<T>,
    d_logits: &[T],
    params: &ModelParams<T>,
    groups: GroupSet,
    grads: &mut ModelParams<T>,
) {
    let Some(lowest) = groups.lowest() else {
        return;
    };
    if groups.contains(LayerGroup::Output) {
        outer_acc(&cache.dropped, d_logits, &mut grads.output_weight);
        for (b, &d) in grads.output_bias.data_mut().iter_mut().zip(d_logits) {
            *b += d;
        }
    }
    if lowest == LayerGroup::Output {
        return;
    }

    let mut d_pooled = vec![T::zero(); cache.pooled.len()];
    mat_vec_acc(&params.output_weight, d_logits, &mut d_pooled);
    for (d, &m) in d_pooled.iter_mut().zip(&cache.final_mask) {
        *d *= m * cache.final_scale;
    }
    let grad_score = groups
        .contains(LayerGroup::Attention)
        .then_some(&mut grads.attention);
    let Some(d_features) = attention_backward(
        &cache.attention,
        &d_pooled,
        &params.attention,
        grad_score,
        lowest < LayerGroup::Attention,
    ) else {
        return;
    };

    let max_len = cache.embed_out.rows();
    let e = cache.embed_out.cols();
    let l = cache.lstm0_out.cols();
    let mut d_embed = Tensor2::zeros(max_len, e);
    let mut d_out0 = Tensor2::zeros(max_len, l);
    let mut d_out1 = Tensor2::zeros(max_len, l);
    for t in 0..cache.real_len {
        let row = d_features.row(t);
        d_embed.row_mut(t).copy_from_slice(&row[..e]);
        d_out0.row_mut(t).copy_from_slice(&row[e..e + l]);
        d_out1.row_mut(t).copy_from_slice(&row[e + l..]);
    }

    bilstm_backward(
        &cache.lstm0_out,
        &cache.lstm1,
        &d_out1,
        &params.lstm1,
        groups.contains(LayerGroup::Lstm1).then_some(&mut grads.lstm1),
        (lowest < LayerGroup::Lstm1).then_some(&mut d_out0),
    );
    if lowest == LayerGroup::Lstm1 {
        return;
    }
    bilstm_backward(
        &cache.embed_out,
        &cache.lstm0,
        &d_out0,
        &params.lstm0,
        groups.contains(LayerGroup::Lstm0).then_some(&mut grads.lstm0),
        (lowest < LayerGroup::Lstm0).then_some(&mut d_embed),
    );
    if groups.contains(LayerGroup::Embed) {
        embed_backward(&cache.embed, &d_embed, cache.real_len, &mut grads.embed);
    }
}

/// Batched forward pass. Returns logits (batch × C), probabilities and the
/// cache for [`model_backward`].
pub fn model_forward<T: Real>(
    batch: &[EncodedExample],
    params: &ModelParams<T>,
    config: &ModelConfig,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Tensor2<T>, Tensor2<T>, ForwardCache<T>)> {
    model_forward_with(Exec::default(), batch, params, config, mode, rng)
}

pub fn model_forward_with<T: Real>(
    exec: Exec,
    batch: &[EncodedExample],
    params: &ModelParams<T>,
    config: &ModelConfig,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Tensor2<T>, Tensor2<T>, ForwardCache<T>)> {
    ensure_contract!(!batch.is_empty(), "model_forward on an empty batch");
    let rngs = example_rngs(batch.len(), mode, rng);
    let examples = exec
        .map_ordered(batch, |i, ex| {
            let mut r = rngs[i].clone();
            forward_example(ex, params, config, mode, &mut r)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let cache = ForwardCache { examples };
    Ok((cache.logits(), cache.probs(), cache))
}

/// Gradients of every parameter, shaped exactly like `params`.
pub fn model_backward<T: Real>(
    cache: &ForwardCache<T>,
    grad_logits: &Tensor2<T>,
    params: &ModelParams<T>,
) -> Result<ModelParams<T>> {
    model_backward_groups(Exec::default(), cache, grad_logits, params, GroupSet::ALL)
}

/// Like [`model_backward`] but only fills the groups in `groups` (the rest
/// stay zero) and skips backprop below the lowest of them.
pub fn model_backward_groups<T: Real>(
    exec: Exec,
    cache: &ForwardCache<T>,
    grad_logits: &Tensor2<T>,
    params: &ModelParams<T>,
    groups: GroupSet,
) -> Result<ModelParams<T>> {
    ensure_contract!(
        grad_logits.rows() == cache.examples.len(),
        "grad_logits has {} rows for a batch of {}",
        grad_logits.rows(),
        cache.examples.len()
    );
    ensure_contract!(
        grad_logits.cols() == params.output_bias.cols(),
        "grad_logits has {} columns, model has {} classes",
        grad_logits.cols(),
        params.output_bias.cols()
    );
    if let Some(first) = cache.examples.first() {
        ensure_contract!(
            first.pooled.len() == params.attention.cols()
                && first.embed_out.cols() == params.embed.cols(),
            "cache was produced by a model of different shape"
        );
    }
    let chunks: Vec<usize> = (0..cache.examples.len()).step_by(GRAD_CHUNK).collect();
    let partial = exec.map_ordered(&chunks, |_, &start| {
        let mut g = params.zeros_like();
        let end = (start + GRAD_CHUNK).min(cache.examples.len());
        for i in start..end {
            backward_example(&cache.examples[i], grad_logits.row(i), params, groups, &mut g);
        }
        g
    });
    let mut iter = partial.into_iter();
    let mut total = iter.next().unwrap_or_else(|| params.zeros_like());
    for g in iter {
        total.add_groups(&g, groups)?;
    }
    Ok(total)
}

/// Mean cross-entropy of a labeled batch and its gradient for `groups`.
pub fn loss_and_grad<T: Real>(
    exec: Exec,
    batch: &[EncodedExample],
    params: &ModelParams<T>,
    config: &ModelConfig,
    mode: Mode,
    rng: &mut Rng,
    groups: GroupSet,
) -> Result<(T, ModelParams<T>)> {
    let targets = batch_targets(batch)?;
    let (_, probs, cache) = model_forward_with(exec, batch, params, config, mode, rng)?;
    let (loss, grad_logits) = cross_entropy(&probs, &targets)?;
    let grads = model_backward_groups(exec, &cache, &grad_logits, params, groups)?;
    Ok((loss, grads))
}

/// Mean cross-entropy without gradients.
pub fn batch_loss<T: Real>(
    batch: &[EncodedExample],
    params: &ModelParams<T>,
    config: &ModelConfig,
    mode: Mode,
    rng: &mut Rng,
) -> Result<T> {
    let targets = batch_targets(batch)?;
    let (_, probs, _) = model_forward(batch, params, config, mode, rng)?;
    Ok(cross_entropy(&probs, &targets)?.0)
}

fn batch_targets(batch: &[EncodedExample]) -> Result<Vec<usize>> {
    batch
        .iter()
        .map(|e| {
            e.label
                .map(SentimentLabel::index)
                .ok_or_else(|| Error::Contract("training example without a label".into()))
        })
        .collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: SentimentLabel,
    /// Class probabilities in label order.
    pub probs: Vec<f64>,
}

impl Prediction {
    /// Probability of the predicted label.
    pub fn confidence(&self) -> f64 {
        self.probs[self.label.index()]
    }
}

/// A trained network bundled with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier<T> {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ModelParams<T>,
}

impl<T: Real> Classifier<T> {
    pub fn new(config: ModelConfig, vocab: Vocabulary, params: ModelParams<T>) -> Result<Self> {
        config.validate()?;
        ensure_contract!(
            config.vocab_size == vocab.len(),
            "config vocab_size {} but vocabulary holds {} tokens",
            config.vocab_size,
            vocab.len()
        );
        ensure_contract!(
            config.num_classes == SentimentLabel::COUNT,
            "a sentiment classifier needs {} classes, config has {}",
            SentimentLabel::COUNT,
            config.num_classes
        );
        params.check_shapes(&config)?;
        Ok(Classifier {
            config,
            vocab,
            params,
        })
    }

    /// Freshly initialised classifier over `vocab`.
    pub fn init(mut config: ModelConfig, vocab: Vocabulary, rng: &mut Rng) -> Result<Self> {
        config.vocab_size = vocab.len();
        let params = ModelParams::init(&config, rng)?;
        Self::new(config, vocab, params)
    }

    pub fn encode(&self, text: &str, label: Option<SentimentLabel>) -> Result<EncodedExample> {
        encode_text(text, &self.vocab, self.config.max_len, label)
    }

    pub fn predict_encoded(&self, ex: &EncodedExample) -> Result<Prediction> {
        let cache = forward_example(ex, &self.params, &self.config, Mode::Eval, &mut Rng::new(0))?;
        let label = SentimentLabel::from_index(argmax(&cache.probs))?;
        Ok(Prediction {
            label,
            probs: cache.probs.iter().map(|p| p.as_f64()).collect(),
        })
    }

    /// tokenize → encode → eval-mode forward → argmax.
    pub fn predict(&self, text: &str) -> Result<Prediction> {
        self.predict_encoded(&self.encode(text, None)?)
    }

    pub fn predict_batch<S: AsRef<str> + Sync>(&self, exec: Exec, texts: &[S]) -> Result<Vec<Prediction>> {
        exec.map_ordered(texts, |_, t| self.predict(t.as_ref()))
            .into_iter()
            .collect()
    }

    pub fn cast<U: Real>(&self) -> Classifier<U> {
        Classifier {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            params: self.params.cast(),
        }
    }
}

/// Free-function form of [`Classifier::predict`].
pub fn predict<T: Real>(
    text: &str,
    vocab: &Vocabulary,
    params: &ModelParams<T>,
    config: &ModelConfig,
) -> Result<Prediction> {
    let ex = encode_text(text, vocab, config.max_len, None)?;
    let cache = forward_example(&ex, params, config, Mode::Eval, &mut Rng::new(0))?;
    Ok(Prediction {
        label: SentimentLabel::from_index(argmax(&cache.probs))?,
        probs: cache.probs.iter().map(|p| p.as_f64()).collect(),
    })
}
