//! Hold-out sign accuracy, the antonym-pair axis baseline and trajectory
//! extraction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::math::{axpy, dot, norm};
use crate::model::{DynamicModel, EmbeddingModel};
use crate::priors::resolve_word;
use crate::text::PreprocessConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
            Sign::Zero => "0",
        }
    }
}

/// Raw hold-out words with their expected side of zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HoldoutSet {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutWord {
    /// Vocabulary form.
    pub word: String,
    pub id: u32,
    pub expected: Sign,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedHoldout {
    pub words: Vec<HoldoutWord>,
    /// Requested words with no vocabulary match.
    pub missing: Vec<String>,
    /// Requested words dropped because they resolve onto an anchor, or onto
    /// the same type as a word of the opposite sign.
    pub dropped: Vec<String>,
}

impl ResolvedHoldout {
    pub fn from_words(words: Vec<HoldoutWord>) -> Self {
        ResolvedHoldout {
            words,
            ..Default::default()
        }
    }
}

/// Resolves hold-out words like anchors and removes any that land on an
/// id in `exclude` (the anchor sets).
pub fn resolve_holdout<L: Lexicon + ?Sized>(
    lexicon: &L,
    set: &HoldoutSet,
    exclude: &BTreeSet<u32>,
    cfg: &PreprocessConfig,
) -> ResolvedHoldout {
    let mut out = ResolvedHoldout::default();
    let mut by_id: BTreeMap<u32, usize> = BTreeMap::new();
    let mut conflicted: BTreeSet<u32> = BTreeSet::new();
    let mut requested_by: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for (list, expected) in [
        (&set.positive, Sign::Positive),
        (&set.negative, Sign::Negative),
    ] {
        for raw in list {
            let Some((form, id)) = resolve_word(lexicon, raw, cfg) else {
                out.missing.push(raw.clone());
                continue;
            };
            if exclude.contains(&id) {
                out.dropped.push(raw.clone());
                continue;
            }
            requested_by.entry(id).or_default().push(raw.clone());
            match by_id.get(&id) {
                Some(&i) if out.words[i].expected != expected => {
                    conflicted.insert(id);
                }
                Some(_) => {}
                None => {
                    by_id.insert(id, out.words.len());
                    out.words.push(HoldoutWord {
                        word: form,
                        id,
                        expected,
                    });
                }
            }
        }
    }
    if !conflicted.is_empty() {
        out.words.retain(|w| !conflicted.contains(&w.id));
        for id in &conflicted {
            out.dropped
                .extend(requested_by.remove(id).unwrap_or_default());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordOutcome {
    pub word: String,
    pub expected: Sign,
    pub rho: Sign,
    pub alpha: Sign,
}

impl WordOutcome {
    pub fn rho_correct(&self) -> bool {
        self.rho == self.expected
    }

    pub fn alpha_correct(&self) -> bool {
        self.alpha == self.expected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    /// Headline metric: sign of the embedding vector.
    pub accuracy_rho: f64,
    pub accuracy_alpha: f64,
    /// Both signs correct.
    pub accuracy_joint: f64,
    pub ci_rho: (f64, f64),
    pub ci_alpha: (f64, f64),
    pub ci_joint: (f64, f64),
    pub z: f64,
    pub per_word: Vec<WordOutcome>,
}

impl EvalReport {
    fn from_outcomes(per_word: Vec<WordOutcome>, z: f64) -> Result<Self> {
        let n = per_word.len();
        if n == 0 {
            return Err(Error::EmptyHoldout);
        }
        let frac = |k: usize| k as f64 / n as f64;
        let rho = per_word.iter().filter(|w| w.rho_correct()).count();
        let alpha = per_word.iter().filter(|w| w.alpha_correct()).count();
        let joint = per_word
            .iter()
            .filter(|w| w.rho_correct() && w.alpha_correct())
            .count();
        Ok(EvalReport {
            n,
            accuracy_rho: frac(rho),
            accuracy_alpha: frac(alpha),
            accuracy_joint: frac(joint),
            ci_rho: binomial_ci(frac(rho), n, z),
            ci_alpha: binomial_ci(frac(alpha), n, z),
            ci_joint: binomial_ci(frac(joint), n, z),
            z,
            per_word,
        })
    }
}

/// Normal-approximation interval `p +- z sqrt(p (1 - p) / n)`, clamped to
/// `[0, 1]`.
pub fn binomial_ci(p_hat: f64, n: usize, z: f64) -> (f64, f64) {
    let half = z * libm::sqrt(p_hat * (1.0 - p_hat) / n as f64);
    ((p_hat - half).max(0.0), (p_hat + half).min(1.0))
}

/// Fraction of hold-out words on the expected side of zero on the
/// interpretable dimension. Exact zeros count as wrong.
pub fn holdout_accuracy(
    model: &EmbeddingModel,
    holdout: &ResolvedHoldout,
    z: f64,
) -> Result<EvalReport> {
    let k = model.dims() - 1;
    let per_word = holdout
        .words
        .iter()
        .map(|w| WordOutcome {
            word: w.word.clone(),
            expected: w.expected,
            rho: Sign::of(model.rho.get(w.id as usize, k)),
            alpha: Sign::of(model.alpha.get(w.id as usize, k)),
        })
        .collect();
    EvalReport::from_outcomes(per_word, z)
}

/// Resolves `(positive, negative)` antonym pairs to ids.
pub fn resolve_pairs<L: Lexicon + ?Sized>(
    lexicon: &L,
    pairs: &[(String, String)],
    cfg: &PreprocessConfig,
) -> Result<Vec<(u32, u32)>> {
    let id = |w: &String| {
        resolve_word(lexicon, w, cfg)
            .map(|(_, id)| id)
            .ok_or_else(|| Error::UnresolvedWord(w.clone()))
    };
    pairs.iter().map(|(p, n)| Ok((id(p)?, id(n)?))).collect()
}

/// `sum over pairs of rho_pos / |rho_pos| - rho_neg / |rho_neg|`.
pub fn sota_axis(model: &EmbeddingModel, pairs: &[(u32, u32)]) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig(String::from(
            "at least one antonym pair is required",
        )));
    }
    let mut axis = vec![0.0; model.dims()];
    for &(p, n) in pairs {
        for (id, sign) in [(p, 1.0), (n, -1.0)] {
            let row = model.rho.row(id as usize);
            let len = norm(row);
            if len == 0.0 {
                return Err(Error::ZeroNorm(format!("id {id}")));
            }
            axpy(sign / len, row, &mut axis);
        }
    }
    Ok(axis)
}

/// Classifies hold-out words by the sign of their cosine with `axis`.
/// Context vectors are scored against the same axis.
pub fn sota_accuracy(
    model: &EmbeddingModel,
    axis: &[f64],
    holdout: &ResolvedHoldout,
    z: f64,
) -> Result<EvalReport> {
    if norm(axis) == 0.0 {
        return Err(Error::ZeroAxis);
    }
    // positive norms do not change the sign of the cosine
    let per_word = holdout
        .words
        .iter()
        .map(|w| WordOutcome {
            word: w.word.clone(),
            expected: w.expected,
            rho: Sign::of(dot(model.rho.row(w.id as usize), axis)),
            alpha: Sign::of(dot(model.alpha.row(w.id as usize), axis)),
        })
        .collect();
    EvalReport::from_outcomes(per_word, z)
}

/// Interpretable-dimension value of `word` in every slice.
pub fn trajectory<L: Lexicon + ?Sized>(
    model: &DynamicModel,
    labels: &[String],
    lexicon: &L,
    word: &str,
    cfg: &PreprocessConfig,
) -> Result<Vec<(String, f64)>> {
    let (_, id) = resolve_word(lexicon, word, cfg)
        .ok_or_else(|| Error::UnresolvedWord(String::from(word)))?;
    let k = model.dims() - 1;
    Ok(model
        .rho
        .iter()
        .enumerate()
        .map(|(t, rho)| {
            let label = labels.get(t).cloned().unwrap_or_else(|| format!("{t}"));
            (label, rho.get(id as usize, k))
        })
        .collect())
}
