use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
}

/// The retained word types, ordered by descending count (ties broken
/// lexicographically), with ids equal to positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: BTreeMap<String, u32>,
    total_tokens: u64,
}

/// Counts `tokens` and keeps the `vocab_max` most frequent types.
pub fn build_vocabulary<S: AsRef<str>>(tokens: &[S], vocab_max: usize) -> Result<Vocabulary> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for t in tokens {
        let t = t.as_ref();
        match counts.get_mut(t) {
            Some(c) => *c += 1,
            None => {
                counts.insert(String::from(t), 1);
            }
        }
    }
    Vocabulary::from_counts(counts, vocab_max)
}

impl Vocabulary {
    /// Builds a vocabulary from precomputed counts. Zero counts are ignored.
    pub fn from_counts(counts: BTreeMap<String, u64>, vocab_max: usize) -> Result<Self> {
        let mut entries: Vec<VocabEntry> = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(word, count)| VocabEntry { word, count })
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyTokens);
        }
        // BTreeMap order is already lexicographic; a stable sort keeps it
        // within equal counts.
        entries.sort_by_key(|e| core::cmp::Reverse(e.count));
        entries.truncate(vocab_max);
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i as u32))
            .collect();
        let total_tokens = entries.iter().map(|e| e.count).sum();
        Ok(Vocabulary {
            entries,
            index,
            total_tokens,
        })
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn count(&self, id: u32) -> u64 {
        self.entries[id as usize].count
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.count)
    }

    /// Sum of counts over retained types.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Relative frequency `count / total_tokens`.
    pub fn frequency(&self, id: u32) -> f64 {
        self.count(id) as f64 / self.total_tokens as f64
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }
}

impl Lexicon for Vocabulary {
    fn id_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    fn word_of(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|e| e.word.as_str())
    }

    fn len(&self) -> usize {
        self.entries.len()
    }
}
