//! Planted-dimension corpus generator.
//!
//! Half of the signal types carry latent polarity `+`, half `-`. Every
//! document draws a polarity uniformly; each of its tokens comes from that
//! polarity's signal pool with probability `mix`, otherwise from the
//! neutral pool. Signal words of the same polarity therefore co-occur,
//! which is the structure an interpretable dimension should pick up.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{Corpus, Slice};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub fn name(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        }
    }

    fn opposite(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            Polarity::Neutral => Polarity::Neutral,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub vocab_size: usize,
    /// Signal types, split evenly between the two polarities.
    pub n_signal: usize,
    pub n_docs: usize,
    pub doc_len: usize,
    /// Probability a token comes from its document's signal pool.
    pub mix: f64,
    pub seed: u64,
    /// Power-law exponent for neutral-pool draws (`None` = uniform).
    pub zipf: Option<f64>,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            vocab_size: 500,
            n_signal: 100,
            n_docs: 2000,
            doc_len: 100,
            mix: 0.7,
            seed: 0,
            zipf: None,
        }
    }
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_signal % 2 != 0 || self.n_signal == 0 {
            return bad(format!(
                "n_signal must be even and positive, got {}",
                self.n_signal
            ));
        }
        if self.n_signal > self.vocab_size {
            return bad(format!(
                "n_signal ({}) exceeds vocab_size ({})",
                self.n_signal, self.vocab_size
            ));
        }
        if !(0.0..=1.0).contains(&self.mix) {
            return bad(format!("mix must lie in [0, 1], got {}", self.mix));
        }
        if self.n_signal == self.vocab_size && self.mix < 1.0 {
            return bad(String::from("an empty neutral pool requires mix = 1"));
        }
        if self.n_docs == 0 || self.doc_len == 0 {
            return bad(String::from("n_docs and doc_len must be positive"));
        }
        Ok(())
    }

    /// Latent polarity of planted type `index`.
    pub fn polarity(&self, index: usize) -> Polarity {
        let half = self.n_signal / 2;
        if index < half {
            Polarity::Positive
        } else if index < self.n_signal {
            Polarity::Negative
        } else {
            Polarity::Neutral
        }
    }
}

/// A planted type switching to the opposite signal pool from `from_slice`
/// onwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flip {
    pub index: usize,
    pub from_slice: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicedSpec {
    pub base: PlantedSpec,
    pub slices: usize,
    pub flips: Vec<Flip>,
    /// Every slice reuses the documents of slice 0 (flips ignored).
    pub repeat_data: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedDocument {
    pub polarity: Polarity,
    /// Planted type indices.
    pub tokens: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    /// Slice-0 polarity of every planted word.
    pub truth: BTreeMap<String, Polarity>,
    /// Surface form of each planted type index.
    pub words: Vec<String>,
    /// Documents per slice, in corpus order.
    pub documents: Vec<(String, Vec<PlantedDocument>)>,
}

impl PlantedCorpus {
    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    /// Vocabulary id of planted type `index`, if it occurred.
    pub fn id(&self, index: usize) -> Option<u32> {
        self.vocab.id_of(&self.words[index])
    }

    /// Documents of one slice as whitespace-separated lines.
    pub fn slice_text(&self, slice: usize) -> String {
        let mut out = String::new();
        for doc in &self.documents[slice].1 {
            for (i, &t) in doc.tokens.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&self.words[t]);
            }
            out.push('\n');
        }
        out
    }
}

const CONSONANTS: &[u8] = b"bdfgkmpz";
const VOWELS: &[u8] = b"aou";

/// Pronounceable, digit-free name for planted type `index`. Names are
/// fixed points of the preprocessing pipeline (lowercase letters the Porter
/// rules never strip).
pub fn planted_word(index: usize) -> String {
    let nc = CONSONANTS.len();
    let syllables = nc * VOWELS.len();
    let last = CONSONANTS[index % nc] as char;
    let mut rest = index / nc;
    let mut parts = Vec::new();
    while rest > 0 || parts.len() < 2 {
        let s = rest % syllables;
        parts.push([
            CONSONANTS[s / VOWELS.len()] as char,
            VOWELS[s % VOWELS.len()] as char,
        ]);
        rest /= syllables;
    }
    let mut w = String::with_capacity(parts.len() * 2 + 1);
    for p in parts.iter().rev() {
        w.push(p[0]);
        w.push(p[1]);
    }
    w.push(last);
    w
}

/// Single-slice planted corpus.
pub fn generate(spec: &PlantedSpec) -> Result<PlantedCorpus> {
    generate_sliced(&SlicedSpec {
        base: spec.clone(),
        slices: 1,
        flips: Vec::new(),
        repeat_data: false,
    })
}

pub fn generate_sliced(spec: &SlicedSpec) -> Result<PlantedCorpus> {
    let base = &spec.base;
    base.validate()?;
    if spec.slices == 0 {
        return Err(Error::InvalidConfig(String::from(
            "slices must be positive",
        )));
    }
    for f in &spec.flips {
        if f.index >= base.n_signal {
            return Err(Error::InvalidConfig(format!(
                "flip index {} is not a signal type",
                f.index
            )));
        }
    }
    let words: Vec<String> = (0..base.vocab_size).map(planted_word).collect();
    let neutral_cdf = neutral_cdf(base);

    let mut documents = Vec::with_capacity(spec.slices);
    for t in 0..spec.slices {
        let label = if spec.slices == 1 {
            String::from("all")
        } else {
            format!("slice{t}")
        };
        let docs = if spec.repeat_data && t > 0 {
            documents
                .first()
                .map(|(_, d): &(String, Vec<PlantedDocument>)| d.clone())
                .unwrap_or_default()
        } else {
            let pools = pools_for_slice(base, &spec.flips, t);
            let mut rng = seeded(derive_seed(base.seed, &[t as u64]));
            (0..base.n_docs)
                .map(|_| draw_document(base, &pools, &neutral_cdf, &mut rng))
                .collect()
        };
        documents.push((label, docs));
    }

    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (_, docs) in &documents {
        for d in docs {
            for &tok in &d.tokens {
                *counts.entry(words[tok].clone()).or_insert(0) += 1;
            }
        }
    }
    let vocab = Vocabulary::from_counts(counts, base.vocab_size)?;
    let slices = documents
        .iter()
        .map(|(label, docs)| Slice {
            label: label.clone(),
            tokens: docs
                .iter()
                .flat_map(|d| d.tokens.iter())
                .map(|&tok| vocab.id_of(&words[tok]).expect("counted above"))
                .collect(),
        })
        .collect();
    let corpus = Corpus::new(slices, vocab.len())?;
    let truth = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), base.polarity(i)))
        .collect();
    Ok(PlantedCorpus {
        corpus,
        vocab,
        truth,
        words,
        documents,
    })
}

struct Pools {
    positive: Vec<usize>,
    negative: Vec<usize>,
}

fn pools_for_slice(base: &PlantedSpec, flips: &[Flip], t: usize) -> Pools {
    let mut pools = Pools {
        positive: Vec::new(),
        negative: Vec::new(),
    };
    for i in 0..base.n_signal {
        let mut p = base.polarity(i);
        if flips.iter().any(|f| f.index == i && t >= f.from_slice) {
            p = p.opposite();
        }
        match p {
            Polarity::Positive => pools.positive.push(i),
            Polarity::Negative => pools.negative.push(i),
            Polarity::Neutral => {}
        }
    }
    pools
}

fn neutral_cdf(base: &PlantedSpec) -> Vec<f64> {
    let n = base.vocab_size - base.n_signal;
    let mut total = 0.0;
    (0..n)
        .map(|r| {
            total += match base.zipf {
                Some(s) => 1.0 / libm::pow((r + 1) as f64, s),
                None => 1.0,
            };
            total
        })
        .collect()
}

fn draw_document(
    base: &PlantedSpec,
    pools: &Pools,
    neutral_cdf: &[f64],
    rng: &mut SeededRng,
) -> PlantedDocument {
    let polarity = if rng.gen_bool(0.5) {
        Polarity::Positive
    } else {
        Polarity::Negative
    };
    let pool = match polarity {
        Polarity::Positive => &pools.positive,
        _ => &pools.negative,
    };
    let tokens = (0..base.doc_len)
        .map(|_| {
            let signal = neutral_cdf.is_empty() || rng.gen::<f64>() < base.mix;
            if signal && !pool.is_empty() {
                pool[rng.gen_range(0..pool.len())]
            } else {
                let total = *neutral_cdf.last().expect("neutral pool");
                let u = rng.gen::<f64>() * total;
                let r = neutral_cdf
                    .partition_point(|&c| c <= u)
                    .min(neutral_cdf.len() - 1);
                base.n_signal + r
            }
        })
        .collect();
    PlantedDocument { polarity, tokens }
}
