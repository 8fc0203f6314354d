//! Text normalization: lowercasing, punctuation removal, number
//! replacement and Porter stemming over whitespace-delimited tokens.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::porter;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    /// Replacement token for every number.
    pub number_token: String,
    /// Apply the Porter stemmer to purely alphabetic ASCII tokens.
    pub stem: bool,
    /// Number of most frequent word types kept in the vocabulary.
    pub vocab_max: usize,
    /// Randomly drop frequent tokens before training.
    pub subsample: bool,
    /// Subsampling threshold `t` in `1 - sqrt(t / f)`.
    pub subsample_threshold: f64,
    pub seed: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lowercase: true,
            strip_punctuation: true,
            number_token: String::from("X"),
            stem: true,
            vocab_max: 10_000,
            subsample: true,
            subsample_threshold: 1e-5,
            seed: 0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subsample_threshold.is_nan() || self.subsample_threshold <= 0.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "subsample_threshold must be > 0, got {}",
                self.subsample_threshold
            )));
        }
        if self.vocab_max < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "vocab_max must be >= 2, got {}",
                self.vocab_max
            )));
        }
        if self.number_token.is_empty() || self.number_token.chars().any(char::is_whitespace) {
            return Err(Error::InvalidConfig(String::from(
                "number_token must be non-empty and contain no whitespace",
            )));
        }
        Ok(())
    }
}

/// Normalizes raw bytes, reporting the byte offset of the first invalid
/// UTF-8 sequence.
pub fn preprocess_bytes(raw: &[u8], cfg: &PreprocessConfig) -> Result<Vec<String>> {
    let text = core::str::from_utf8(raw).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(preprocess_text(text, cfg))
}

/// Splits `raw` on whitespace and normalizes each token.
///
/// A maximal run of digits (with `,` or `.` allowed between digits) becomes
/// its own `number_token`, so `"1,000"` and `"$1,000"` both yield one
/// number token. Empty tokens are dropped.
pub fn preprocess_text(raw: &str, cfg: &PreprocessConfig) -> Vec<String> {
    let mut out = Vec::new();
    for token in raw.split_whitespace() {
        normalize_token(token, cfg, &mut out);
    }
    out
}

fn normalize_token(token: &str, cfg: &PreprocessConfig, out: &mut Vec<String>) {
    if token == cfg.number_token {
        out.push(String::from(token));
        return;
    }
    let chars: Vec<char> = token.chars().collect();
    let mut piece = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_numeric() {
            flush_piece(&mut piece, cfg, out);
            i += 1;
            while i < chars.len() {
                if chars[i].is_numeric() {
                    i += 1;
                } else if matches!(chars[i], ',' | '.')
                    && chars.get(i + 1).is_some_and(|n| n.is_numeric())
                {
                    i += 2;
                } else {
                    break;
                }
            }
            out.push(cfg.number_token.clone());
            continue;
        }
        let keep = |ch: char| !cfg.strip_punctuation || ch.is_alphanumeric();
        if cfg.lowercase {
            piece.extend(c.to_lowercase().filter(|&ch| keep(ch)));
        } else if keep(c) {
            piece.push(c);
        }
        i += 1;
    }
    flush_piece(&mut piece, cfg, out);
}

fn flush_piece(piece: &mut String, cfg: &PreprocessConfig, out: &mut Vec<String>) {
    if piece.is_empty() {
        return;
    }
    let word = core::mem::take(piece);
    if cfg.stem && word.bytes().all(|b| b.is_ascii_lowercase()) {
        out.push(porter::stem(&word));
    } else {
        out.push(word);
    }
}
