use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::numcore::{Real, Rng, Tensor2};
use crate::{ensure_contract, Error, Result};

/// The five trainable layer groups, in network order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerGroup {
    Embed,
    Lstm0,
    Lstm1,
    Attention,
    Output,
}

impl LayerGroup {
    pub const ALL: [LayerGroup; 5] = [
        LayerGroup::Embed,
        LayerGroup::Lstm0,
        LayerGroup::Lstm1,
        LayerGroup::Attention,
        LayerGroup::Output,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerGroup::Embed => "embed",
            LayerGroup::Lstm0 => "lstm0",
            LayerGroup::Lstm1 => "lstm1",
            LayerGroup::Attention => "attention",
            LayerGroup::Output => "output",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for LayerGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayerGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown layer group '{s}'")))
    }
}

/// Subset of [`LayerGroup`]s.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<LayerGroup>", from = "Vec<LayerGroup>")]
pub struct GroupSet(u8);

impl GroupSet {
    pub const EMPTY: GroupSet = GroupSet(0);
    pub const ALL: GroupSet = GroupSet(0b1_1111);

    pub fn only(g: LayerGroup) -> Self {
        GroupSet(g.bit())
    }

    pub fn contains(self, g: LayerGroup) -> bool {
        self.0 & g.bit() != 0
    }

    pub fn with(self, g: LayerGroup) -> Self {
        GroupSet(self.0 | g.bit())
    }

    pub fn union(self, other: GroupSet) -> Self {
        GroupSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = LayerGroup> {
        LayerGroup::ALL.into_iter().filter(move |g| self.contains(*g))
    }

    /// Earliest group in network order; backprop never needs to go deeper.
    pub fn lowest(self) -> Option<LayerGroup> {
        self.iter().next()
    }
}

impl FromIterator<LayerGroup> for GroupSet {
    fn from_iter<I: IntoIterator<Item = LayerGroup>>(iter: I) -> Self {
        iter.into_iter().fold(GroupSet::EMPTY, GroupSet::with)
    }
}

impl From<Vec<LayerGroup>> for GroupSet {
    fn from(v: Vec<LayerGroup>) -> Self {
        v.into_iter().collect()
    }
}

impl From<GroupSet> for Vec<LayerGroup> {
    fn from(s: GroupSet) -> Self {
        s.iter().collect()
    }
}

impl fmt::Debug for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == GroupSet::ALL {
            return f.write_str("all");
        }
        let names: Vec<_> = self.iter().map(LayerGroup::name).collect();
        f.write_str(&names.join("+"))
    }
}

/// One LSTM direction. Gate columns are laid out `[input, forget, cell, output]`,
/// each `hidden` wide.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDirection<T> {
    /// d_in × 4H
    pub w_input: Tensor2<T>,
    /// H × 4H
    pub w_hidden: Tensor2<T>,
    /// 1 × 4H
    pub bias: Tensor2<T>,
}

impl<T: Real> LstmDirection<T> {
    pub fn hidden(&self) -> usize {
        self.w_hidden.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.rows()
    }

    fn zeros(d_in: usize, h: usize) -> Self {
        LstmDirection {
            w_input: Tensor2::zeros(d_in, 4 * h),
            w_hidden: Tensor2::zeros(h, 4 * h),
            bias: Tensor2::zeros(1, 4 * h),
        }
    }

    fn init(d_in: usize, h: usize, rng: &mut Rng) -> Self {
        let mut d = Self::zeros(d_in, h);
        fill_uniform(&mut d.w_input, d_in, rng);
        fill_uniform(&mut d.w_hidden, h, rng);
        for b in &mut d.bias.data_mut()[h..2 * h] {
            *b = T::one();
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams<T> {
    pub forward: LstmDirection<T>,
    pub backward: LstmDirection<T>,
}

/// Every learnable array, partitioned into the five layer groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    /// V × E
    pub embed: Tensor2<T>,
    pub lstm0: BiLstmParams<T>,
    pub lstm1: BiLstmParams<T>,
    /// 1 × A score vector
    pub attention: Tensor2<T>,
    /// A × C
    pub output_weight: Tensor2<T>,
    /// 1 × C
    pub output_bias: Tensor2<T>,
}

fn fill_uniform<T: Real>(t: &mut Tensor2<T>, fan_in: usize, rng: &mut Rng) {
    let s = 1.0 / (fan_in as f64).sqrt();
    for v in t.data_mut() {
        *v = T::of(rng.uniform(-s, s));
    }
}

impl<T: Real> ModelParams<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        let (v, e, h) = (config.vocab_size, config.embed_dim, config.lstm_hidden_per_dir);
        let a = config.attention_dim();
        let bi = |d_in| BiLstmParams {
            forward: LstmDirection::zeros(d_in, h),
            backward: LstmDirection::zeros(d_in, h),
        };
        ModelParams {
            embed: Tensor2::zeros(v, e),
            lstm0: bi(e),
            lstm1: bi(2 * h),
            attention: Tensor2::zeros(1, a),
            output_weight: Tensor2::zeros(a, config.num_classes),
            output_bias: Tensor2::zeros(1, config.num_classes),
        }
    }

    /// Uniform `[-s, s]` weights with `s = 1/sqrt(fan_in)`; the embedding
    /// table is a one-hot lookup, so its fan-in is 1. Forget-gate biases
    /// start at 1, all other biases at 0.
    pub fn init(config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let (e, h) = (config.embed_dim, config.lstm_hidden_per_dir);
        let a = config.attention_dim();
        let mut p = Self::zeros(config);
        fill_uniform(&mut p.embed, 1, rng);
        p.lstm0 = BiLstmParams {
            forward: LstmDirection::init(e, h, rng),
            backward: LstmDirection::init(e, h, rng),
        };
        p.lstm1 = BiLstmParams {
            forward: LstmDirection::init(2 * h, h, rng),
            backward: LstmDirection::init(2 * h, h, rng),
        };
        fill_uniform(&mut p.attention, a, rng);
        fill_uniform(&mut p.output_weight, a, rng);
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        let z = |t: &Tensor2<T>| Tensor2::zeros(t.rows(), t.cols());
        let dir = |d: &LstmDirection<T>| LstmDirection {
            w_input: z(&d.w_input),
            w_hidden: z(&d.w_hidden),
            bias: z(&d.bias),
        };
        let bi = |b: &BiLstmParams<T>| BiLstmParams {
            forward: dir(&b.forward),
            backward: dir(&b.backward),
        };
        ModelParams {
            embed: z(&self.embed),
            lstm0: bi(&self.lstm0),
            lstm1: bi(&self.lstm1),
            attention: z(&self.attention),
            output_weight: z(&self.output_weight),
            output_bias: z(&self.output_bias),
        }
    }

    /// Tensors of one group in a fixed order.
    pub fn group(&self, g: LayerGroup) -> Vec<&Tensor2<T>> {
        fn bi<T>(b: &BiLstmParams<T>) -> Vec<&Tensor2<T>> {
            vec![
                &b.forward.w_input,
                &b.forward.w_hidden,
                &b.forward.bias,
                &b.backward.w_input,
                &b.backward.w_hidden,
                &b.backward.bias,
            ]
        }
        match g {
            LayerGroup::Embed => vec![&self.embed],
            LayerGroup::Lstm0 => bi(&self.lstm0),
            LayerGroup::Lstm1 => bi(&self.lstm1),
            LayerGroup::Attention => vec![&self.attention],
            LayerGroup::Output => vec![&self.output_weight, &self.output_bias],
        }
    }

    pub fn group_mut(&mut self, g: LayerGroup) -> Vec<&mut Tensor2<T>> {
        fn bi<T>(b: &mut BiLstmParams<T>) -> Vec<&mut Tensor2<T>> {
            let BiLstmParams { forward, backward } = b;
            vec![
                &mut forward.w_input,
                &mut forward.w_hidden,
                &mut forward.bias,
                &mut backward.w_input,
                &mut backward.w_hidden,
                &mut backward.bias,
            ]
        }
        match g {
            LayerGroup::Embed => vec![&mut self.embed],
            LayerGroup::Lstm0 => bi(&mut self.lstm0),
            LayerGroup::Lstm1 => bi(&mut self.lstm1),
            LayerGroup::Attention => vec![&mut self.attention],
            LayerGroup::Output => vec![&mut self.output_weight, &mut self.output_bias],
        }
    }

    /// All tensors, group by group in network order.
    pub fn tensors(&self) -> Vec<&Tensor2<T>> {
        LayerGroup::ALL.iter().flat_map(|&g| self.group(g)).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2<T>> {
        let ModelParams {
            embed,
            lstm0,
            lstm1,
            attention,
            output_weight,
            output_bias,
        } = self;
        let mut v = vec![embed as &mut Tensor2<T>];
        for b in [lstm0, lstm1] {
            let BiLstmParams { forward, backward } = b;
            for d in [forward, backward] {
                v.push(&mut d.w_input);
                v.push(&mut d.w_hidden);
                v.push(&mut d.bias);
            }
        }
        v.push(attention);
        v.push(output_weight);
        v.push(output_bias);
        v
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Checks every tensor shape against `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let want = Self::zeros(config);
        for g in LayerGroup::ALL {
            for (a, b) in self.group(g).into_iter().zip(want.group(g)) {
                ensure_contract!(
                    a.shape() == b.shape(),
                    "{g} tensor has shape {:?}, config expects {:?}",
                    a.shape(),
                    b.shape()
                );
            }
        }
        Ok(())
    }

    /// `self += other` over the groups in `groups`.
    pub fn add_groups(&mut self, other: &Self, groups: GroupSet) -> Result<()> {
        for g in groups.iter() {
            for (a, b) in self.group_mut(g).into_iter().zip(other.group(g)) {
                a.add_assign(b)?;
            }
        }
        Ok(())
    }

    pub fn to_flat_f64(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|t| t.data().iter().map(|v| v.as_f64()))
            .collect()
    }

    /// Inverse of [`Self::to_flat_f64`] for a parameter set of the same shape.
    pub fn assign_flat_f64(&mut self, flat: &[f64]) -> Result<()> {
        ensure_contract!(
            flat.len() == self.num_params(),
            "flat vector has {} values, params hold {}",
            flat.len(),
            self.num_params()
        );
        let mut off = 0;
        for t in self.tensors_mut() {
            for v in t.data_mut() {
                *v = T::of(flat[off]);
                off += 1;
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let dir = |d: &LstmDirection<T>| LstmDirection {
            w_input: d.w_input.cast(),
            w_hidden: d.w_hidden.cast(),
            bias: d.bias.cast(),
        };
        let bi = |b: &BiLstmParams<T>| BiLstmParams {
            forward: dir(&b.forward),
            backward: dir(&b.backward),
        };
        ModelParams {
            embed: self.embed.cast(),
            lstm0: bi(&self.lstm0),
            lstm1: bi(&self.lstm1),
            attention: self.attention.cast(),
            output_weight: self.output_weight.cast(),
            output_bias: self.output_bias.cast(),
        }
    }

    /// Whether every tensor of `g` is bit-identical in `self` and `other`.
    pub fn group_bits_equal(&self, other: &Self, g: LayerGroup) -> bool {
        self.group(g).iter().zip(other.group(g)).all(|(a, b)| {
            a.shape() == b.shape()
                && a
                    .data()
                    .iter()
                    .zip(b.data())
                    .all(|(x, y)| x.as_f64().to_bits() == y.as_f64().to_bits())
        })
    }
}
