//! Synthetic multi-domain sentiment corpora.
//!
//! Every domain draws documents from one shared polarity lexicon. Domains
//! other than the teacher domain additionally own a synonym for each
//! sentiment word and swap it in with probability `rho`, so a model trained
//! on the teacher domain alone never sees those synonyms labeled.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pseudolabel::numcore::Rng;
use pseudolabel::textpipe::{JsonlWriter, LabeledExample, SentimentLabel, UnlabeledDoc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    /// Number of domains K.
    pub domains: usize,
    pub teacher_domain: usize,
    pub labeled_per_domain: usize,
    /// Unlabeled documents across all domains, written as one mixed file.
    pub unlabeled_total: usize,
    pub test_per_domain: usize,
    /// Words per sentiment class in the shared lexicon.
    pub lexicon_per_class: usize,
    /// Sentiment-neutral filler words shared by all domains.
    pub shared_filler: usize,
    /// Topic filler words owned by each domain.
    pub domain_filler: usize,
    pub rho: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a token is a sentiment word rather than filler.
    pub sentiment_density: f64,
    /// Probability that a sentiment word comes from the document's own class.
    pub label_purity: f64,
    /// Probability that a labeled or test document's label is replaced by a
    /// different class after generation.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            domains: 3,
            teacher_domain: 0,
            labeled_per_domain: 2000,
            unlabeled_total: 20000,
            test_per_domain: 1000,
            lexicon_per_class: 24,
            shared_filler: 150,
            domain_filler: 40,
            rho: 0.5,
            min_len: 6,
            max_len: 14,
            sentiment_density: 0.3,
            label_purity: 0.75,
            label_noise: 0.05,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.domains == 0 {
            bad.push("domains must be at least 1".to_string());
        }
        if self.teacher_domain >= self.domains.max(1) {
            bad.push(format!("teacher_domain {} must be below domains", self.teacher_domain));
        }
        for (name, v) in [
            ("labeled_per_domain", self.labeled_per_domain),
            ("unlabeled_total", self.unlabeled_total),
            ("test_per_domain", self.test_per_domain),
            ("lexicon_per_class", self.lexicon_per_class),
            ("shared_filler", self.shared_filler),
            ("min_len", self.min_len),
        ] {
            if v == 0 {
                bad.push(format!("{name} must be at least 1"));
            }
        }
        if self.max_len < self.min_len {
            bad.push("max_len must be at least min_len".to_string());
        }
        if !(0.0..1.0).contains(&self.rho) {
            bad.push(format!("rho {} not in [0, 1)", self.rho));
        }
        for (name, v) in [
            ("sentiment_density", self.sentiment_density),
            ("label_purity", self.label_purity),
            ("label_noise", self.label_noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bad.push(format!("{name} {v} not in [0, 1]"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            bail!("invalid synth spec: {}", bad.join("; "))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let spec: SynthSpec =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Words of one domain: `sentiment[class][j]` is the j-th word of a class.
#[derive(Debug, Clone)]
struct DomainLexicon {
    synonyms: Option<[Vec<String>; 3]>,
    filler: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    sentiment: [Vec<String>; 3],
    shared_filler: Vec<String>,
    domains: Vec<DomainLexicon>,
}

struct WordMaker {
    seen: HashSet<String>,
}

impl WordMaker {
    const ONSETS: [&'static str; 16] = [
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st",
    ];
    const VOWELS: [&'static str; 6] = ["a", "e", "i", "o", "u", "ai"];

    fn word(&mut self, rng: &mut Rng) -> String {
        loop {
            let syllables = rng.range_inclusive(2, 3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(Self::ONSETS[rng.below(Self::ONSETS.len())]);
                w.push_str(Self::VOWELS[rng.below(Self::VOWELS.len())]);
            }
            if self.seen.insert(w.clone()) {
                return w;
            }
        }
    }

    fn words(&mut self, n: usize, rng: &mut Rng) -> Vec<String> {
        (0..n).map(|_| self.word(rng)).collect()
    }
}

impl Lexicon {
    pub fn generate(spec: &SynthSpec, rng: &mut Rng) -> Self {
        let mut maker = WordMaker { seen: HashSet::new() };
        let n = spec.lexicon_per_class;
        let sentiment = [maker.words(n, rng), maker.words(n, rng), maker.words(n, rng)];
        let shared_filler = maker.words(spec.shared_filler, rng);
        let domains = (0..spec.domains)
            .map(|k| DomainLexicon {
                synonyms: (k != spec.teacher_domain)
                    .then(|| [maker.words(n, rng), maker.words(n, rng), maker.words(n, rng)]),
                filler: maker.words(spec.domain_filler, rng),
            })
            .collect();
        Lexicon {
            sentiment,
            shared_filler,
            domains,
        }
    }

    fn document(&self, spec: &SynthSpec, domain: usize, label: SentimentLabel, rng: &mut Rng) -> String {
        let dom = &self.domains[domain];
        let len = rng.range_inclusive(spec.min_len, spec.max_len);
        let mut words: Vec<&str> = Vec::with_capacity(len);
        for _ in 0..len {
            if rng.bernoulli(spec.sentiment_density) {
                let class = if rng.bernoulli(spec.label_purity) {
                    label.index()
                } else {
                    (label.index() + 1 + rng.below(2)) % 3
                };
                let j = rng.below(spec.lexicon_per_class);
                let word = match &dom.synonyms {
                    Some(syn) if rng.bernoulli(spec.rho) => &syn[class][j],
                    _ => &self.sentiment[class][j],
                };
                words.push(word);
            } else if !dom.filler.is_empty() && rng.bernoulli(0.3) {
                words.push(&dom.filler[rng.below(dom.filler.len())]);
            } else {
                words.push(&self.shared_filler[rng.below(self.shared_filler.len())]);
            }
        }
        words.join(" ")
    }

    /// `n` documents with balanced classes in shuffled order. Label noise is
    /// applied when `noisy` is set.
    fn labeled(&self, spec: &SynthSpec, domain: usize, n: usize, noisy: bool, rng: &mut Rng) -> Vec<LabeledExample> {
        let mut labels: Vec<SentimentLabel> = (0..n).map(|i| SentimentLabel::ALL[i % 3]).collect();
        rng.shuffle(&mut labels);
        labels
            .into_iter()
            .map(|label| {
                let text = self.document(spec, domain, label, rng);
                let label = if noisy && rng.bernoulli(spec.label_noise) {
                    SentimentLabel::ALL[(label.index() + 1 + rng.below(2)) % 3]
                } else {
                    label
                };
                LabeledExample::new(text, label)
            })
            .collect()
    }
}

/// Generated corpora, all in memory.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub labeled: Vec<Vec<LabeledExample>>,
    pub test: Vec<Vec<LabeledExample>>,
    pub unlabeled: Vec<UnlabeledDoc>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let root = Rng::new(spec.seed);
    let lexicon = Lexicon::generate(spec, &mut root.fork(0));
    let k = spec.domains;
    let mut labeled = Vec::with_capacity(k);
    let mut test = Vec::with_capacity(k);
    for d in 0..k {
        let mut rng = root.fork(1 + d as u64);
        labeled.push(lexicon.labeled(spec, d, spec.labeled_per_domain, true, &mut rng));
        test.push(lexicon.labeled(spec, d, spec.test_per_domain, true, &mut rng));
    }
    let mut rng = root.fork(1 + k as u64);
    let mut unlabeled = Vec::with_capacity(spec.unlabeled_total);
    for i in 0..spec.unlabeled_total {
        let d = i % k;
        let label = SentimentLabel::ALL[rng.below(3)];
        unlabeled.push((d, i / k, lexicon.document(spec, d, label, &mut rng)));
    }
    rng.shuffle(&mut unlabeled);
    let unlabeled = unlabeled
        .into_iter()
        .map(|(d, i, text)| UnlabeledDoc {
            id: format!("d{d}-{i}"),
            text,
        })
        .collect();
    Ok(SynthData {
        labeled,
        test,
        unlabeled,
    })
}

/// Paths of the files written by [`write_synth`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifest {
    pub spec: SynthSpec,
    pub labeled: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    pub unlabeled: PathBuf,
}

impl SynthManifest {
    pub fn teacher_labeled(&self) -> &Path {
        &self.labeled[self.spec.teacher_domain]
    }

    pub fn teacher_test(&self) -> &Path {
        &self.test[self.spec.teacher_domain]
    }
}

/// Writes `domain_<k>/{labeled,test}.jsonl`, a mixed `unlabeled.jsonl` and
/// `manifest.json` under `out`.
pub fn write_synth(spec: &SynthSpec, out: &Path) -> Result<SynthManifest> {
    let data = generate(spec)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut manifest = SynthManifest {
        spec: spec.clone(),
        labeled: Vec::new(),
        test: Vec::new(),
        unlabeled: out.join("unlabeled.jsonl"),
    };
    for d in 0..spec.domains {
        let dir = out.join(format!("domain_{d}"));
        fs::create_dir_all(&dir)?;
        let (l, t) = (dir.join("labeled.jsonl"), dir.join("test.jsonl"));
        write_records(&l, &data.labeled[d])?;
        write_records(&t, &data.test[d])?;
        manifest.labeled.push(l);
        manifest.test.push(t);
    }
    write_records(&manifest.unlabeled, &data.unlabeled)?;
    let json = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(out.join("manifest.json"), json)?;
    Ok(manifest)
}

fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = JsonlWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()?;
    Ok(())
}
