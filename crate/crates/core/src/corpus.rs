//! Token-id streams partitioned into time slices, and frequency
//! subsampling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::rng::{derive_seed, seeded};
use crate::text::PreprocessConfig;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    pub label: String,
    pub tokens: Vec<u32>,
}

/// Ordered time slices. A static corpus has exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    slices: Vec<Slice>,
}

impl Corpus {
    /// Checks label uniqueness and that every id is below `vocab_size`.
    pub fn new(slices: Vec<Slice>, vocab_size: usize) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = BTreeSet::new();
        for s in &slices {
            if !seen.insert(s.label.as_str()) {
                return Err(Error::DuplicateSliceLabel(s.label.clone()));
            }
            if let Some(&id) = s.tokens.iter().find(|&&id| id as usize >= vocab_size) {
                return Err(Error::IdOutOfRange {
                    id: id as usize,
                    size: vocab_size,
                });
            }
        }
        Ok(Corpus { slices })
    }

    pub fn single(label: impl Into<String>, tokens: Vec<u32>, vocab_size: usize) -> Result<Self> {
        Corpus::new(
            alloc::vec![Slice {
                label: label.into(),
                tokens
            }],
            vocab_size,
        )
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.slices.iter().map(|s| s.label.as_str())
    }

    pub fn num_tokens(&self) -> usize {
        self.slices.iter().map(|s| s.tokens.len()).sum()
    }
}

/// Probability of discarding a token of relative frequency `frequency`:
/// `max(0, 1 - sqrt(threshold / frequency))`.
pub fn removal_probability(frequency: f64, threshold: f64) -> f64 {
    if frequency <= 0.0 {
        return 0.0;
    }
    (1.0 - libm::sqrt(threshold / frequency)).max(0.0)
}

/// Drops each token independently with [`removal_probability`] of its type.
/// Survivors keep their order.
pub fn subsample<R: Rng + ?Sized>(
    tokens: &[u32],
    vocab: &Vocabulary,
    threshold: f64,
    rng: &mut R,
) -> Vec<u32> {
    let discard: Vec<f64> = (0..vocab.len() as u32)
        .map(|id| removal_probability(vocab.frequency(id), threshold))
        .collect();
    tokens
        .iter()
        .copied()
        .filter(|&id| {
            let p = discard[id as usize];
            // one draw per token keeps the stream aligned with the seed
            let u: f64 = rng.gen();
            u >= p
        })
        .collect()
}

/// Builds the vocabulary over all slices, maps words to ids (dropping
/// types outside the vocabulary) and, if enabled, subsamples each slice with
/// a stream derived from `cfg.seed` and the slice index.
///
/// `slices` are preprocessed word sequences in temporal order.
pub fn assemble_corpus(
    slices: Vec<(String, Vec<String>)>,
    cfg: &PreprocessConfig,
) -> Result<(Corpus, Vocabulary)> {
    cfg.validate()?;
    if slices.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut labels = BTreeSet::new();
    for (label, _) in &slices {
        if !labels.insert(label.as_str()) {
            return Err(Error::DuplicateSliceLabel(label.clone()));
        }
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (_, words) in &slices {
        for w in words {
            match counts.get_mut(w.as_str()) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(w.clone(), 1);
                }
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = Vocabulary::from_counts(counts, cfg.vocab_max)?;

    let mut out = Vec::with_capacity(slices.len());
    for (t, (label, words)) in slices.into_iter().enumerate() {
        let ids: Vec<u32> = words.iter().filter_map(|w| vocab.id_of(w)).collect();
        let tokens = if cfg.subsample {
            let mut rng = seeded(derive_seed(cfg.seed, &[t as u64]));
            subsample(&ids, &vocab, cfg.subsample_threshold, &mut rng)
        } else {
            ids
        };
        out.push(Slice { label, tokens });
    }
    let corpus = Corpus::new(out, vocab.len())?;
    if corpus.num_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok((corpus, vocab))
}
