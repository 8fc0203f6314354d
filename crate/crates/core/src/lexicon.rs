use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Bidirectional word/id lookup.
pub trait Lexicon {
    fn id_of(&self, word: &str) -> Option<u32>;
    fn word_of(&self, id: u32) -> Option<&str>;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Words in id order, without counts. Used for models read back from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    words: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl WordList {
    /// Returns `None` if a word repeats.
    pub fn new(words: Vec<String>) -> Option<Self> {
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return None;
            }
        }
        Some(WordList { words, index })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

impl Lexicon for WordList {
    fn id_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    fn word_of(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    fn len(&self) -> usize {
        self.words.len()
    }
}
