//! On-disk formats: corpus manifests, vocabulary and token caches, model
//! files, word-list files and report tables. Every writer produces bytes
//! that depend only on its inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use anchorvec_core::eval::EvalReport;
use anchorvec_core::trainer::EpochStats;
use anchorvec_core::{
    preprocess_bytes, Corpus, DynamicModel, EmbeddingModel, Error as CoreError, Lexicon, Matrix,
    PreprocessConfig, Slice, Vocabulary, WordList,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub fn read_bytes(path: &Path) -> AppResult<Vec<u8>> {
    fs::read(path).map_err(|e| AppError::io(path, e))
}

pub fn read_string(path: &Path) -> AppResult<String> {
    String::from_utf8(read_bytes(path)?).map_err(|e| AppError::Utf8 {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> AppResult<()> {
    fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

fn not_found(path: PathBuf, what: &str) -> AppError {
    AppError::io(
        path,
        std::io::Error::new(ErrorKind::NotFound, what.to_string()),
    )
}

// ---------------------------------------------------------------- manifest

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    slice: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    label: String,
    files: Patterns,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Patterns {
    One(String),
    Many(Vec<String>),
}

/// One slice of a manifest with its files resolved, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestSlice {
    pub label: String,
    pub files: Vec<PathBuf>,
}

/// Reads a corpus manifest:
///
/// ```toml
/// [[slice]]
/// label = "1997"
/// files = "1997/*.txt"      # or a list of patterns
/// ```
///
/// Patterns are relative to the manifest's directory. Each pattern's
/// matches are sorted; a plain path must exist and a glob must match at
/// least one file.
pub fn load_manifest(path: &Path) -> AppResult<Vec<ManifestSlice>> {
    let text = read_string(path)?;
    let manifest: ManifestFile =
        toml::from_str(&text).map_err(|e| AppError::parse(path, e.to_string()))?;
    if manifest.slice.is_empty() {
        return Err(AppError::parse(path, "manifest lists no slices"));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    manifest
        .slice
        .into_iter()
        .map(|entry| {
            if entry.label.is_empty() || entry.label.contains(['\t', '\n', '\r']) {
                return Err(AppError::parse(
                    path,
                    format!(
                        "slice label {:?} must be non-empty without tabs or newlines",
                        entry.label
                    ),
                ));
            }
            let patterns = match entry.files {
                Patterns::One(p) => vec![p],
                Patterns::Many(ps) => ps,
            };
            let mut files = Vec::new();
            for p in &patterns {
                files.extend(expand_pattern(base, p)?);
            }
            Ok(ManifestSlice {
                label: entry.label,
                files,
            })
        })
        .collect()
}

fn expand_pattern(base: &Path, pattern: &str) -> AppResult<Vec<PathBuf>> {
    let is_glob = pattern.contains(['*', '?', '[']);
    let full = base.join(pattern);
    if !is_glob {
        if !full.is_file() {
            return Err(not_found(full, "file not found"));
        }
        return Ok(vec![full]);
    }
    let escaped = glob::Pattern::escape(&base.to_string_lossy());
    let joined = if escaped.is_empty() {
        pattern.to_string()
    } else {
        format!("{escaped}/{pattern}")
    };
    let paths = glob::glob(&joined)
        .map_err(|e| AppError::Config(format!("invalid file pattern {pattern:?}: {e}")))?;
    let mut out = Vec::new();
    for entry in paths {
        let p = entry.map_err(|e| {
            let path = e.path().to_path_buf();
            AppError::io(path, e.into())
        })?;
        if p.is_file() {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(not_found(full, "pattern matches no files"));
    }
    out.sort();
    Ok(out)
}

/// Reads and preprocesses every file of a manifest. Files are processed in
/// parallel and concatenated per slice in manifest order.
pub fn load_corpus(
    manifest: &Path,
    cfg: &PreprocessConfig,
) -> AppResult<Vec<(String, Vec<String>)>> {
    cfg.validate()?;
    let slices = load_manifest(manifest)?;
    let files: Vec<(usize, &PathBuf)> = slices
        .iter()
        .enumerate()
        .flat_map(|(t, s)| s.files.iter().map(move |f| (t, f)))
        .collect();
    let texts: Vec<AppResult<Vec<String>>> = files
        .par_iter()
        .map(|(_, path)| {
            let bytes = read_bytes(path)?;
            preprocess_bytes(&bytes, cfg).map_err(|e| match e {
                CoreError::InvalidUtf8 { offset } => AppError::Utf8 {
                    path: path.to_path_buf(),
                    offset,
                },
                other => other.into(),
            })
        })
        .collect();
    let mut out: Vec<(String, Vec<String>)> = slices
        .iter()
        .map(|s| (s.label.clone(), Vec::new()))
        .collect();
    for ((t, _), tokens) in files.iter().zip(texts) {
        out[*t].1.extend(tokens?);
    }
    Ok(out)
}

// ---------------------------------------------------------------- vocabulary

/// `word<TAB>id<TAB>count`, one line per type in id order.
pub fn vocab_tsv(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (i, e) in vocab.entries().iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}", e.word, i, e.count);
    }
    out
}

pub fn parse_vocab_tsv(path: &Path, text: &str) -> AppResult<Vocabulary> {
    let mut counts = BTreeMap::new();
    let mut order = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |m: &str| AppError::parse(path, format!("line {}: {m}", n + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        let [word, id, count] = fields.as_slice() else {
            return Err(err("expected word<TAB>id<TAB>count"));
        };
        let id: usize = id.parse().map_err(|_| err("id is not an integer"))?;
        let count: u64 = count.parse().map_err(|_| err("count is not an integer"))?;
        if id != n {
            return Err(err("ids must be consecutive from 0"));
        }
        if count == 0 || counts.insert(word.to_string(), count).is_some() {
            return Err(err("duplicate word or zero count"));
        }
        order.push(word.to_string());
    }
    let vocab = Vocabulary::from_counts(counts, usize::MAX)
        .map_err(|_| AppError::parse(path, "empty vocabulary"))?;
    if !vocab.words().eq(order.iter().map(String::as_str)) {
        return Err(AppError::parse(
            path,
            "entries are not in canonical order (count descending, ties lexicographic)",
        ));
    }
    Ok(vocab)
}

// ---------------------------------------------------------------- preprocessing settings

/// Serializable mirror of [`PreprocessConfig`], stored next to a cache so
/// words are later resolved through the identical pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSettings {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub number_token: String,
    pub stem: bool,
    pub vocab_max: usize,
    pub subsample: bool,
    pub subsample_threshold: f64,
    pub seed: u64,
}

impl From<&PreprocessConfig> for PreprocessSettings {
    fn from(c: &PreprocessConfig) -> Self {
        PreprocessSettings {
            lowercase: c.lowercase,
            strip_punctuation: c.strip_punctuation,
            number_token: c.number_token.clone(),
            stem: c.stem,
            vocab_max: c.vocab_max,
            subsample: c.subsample,
            subsample_threshold: c.subsample_threshold,
            seed: c.seed,
        }
    }
}

impl From<PreprocessSettings> for PreprocessConfig {
    fn from(s: PreprocessSettings) -> Self {
        PreprocessConfig {
            lowercase: s.lowercase,
            strip_punctuation: s.strip_punctuation,
            number_token: s.number_token,
            stem: s.stem,
            vocab_max: s.vocab_max,
            subsample: s.subsample,
            subsample_threshold: s.subsample_threshold,
            seed: s.seed,
        }
    }
}

pub fn preprocess_toml(cfg: &PreprocessConfig) -> String {
    toml::to_string(&PreprocessSettings::from(cfg)).expect("plain struct serializes")
}

pub fn read_preprocess_toml(path: &Path) -> AppResult<PreprocessConfig> {
    let text = read_string(path)?;
    let s: PreprocessSettings =
        toml::from_str(&text).map_err(|e| AppError::parse(path, e.to_string()))?;
    Ok(s.into())
}

// ---------------------------------------------------------------- token cache

pub const CACHE_VOCAB: &str = "vocab.tsv";
pub const CACHE_SLICES: &str = "slices.tsv";
pub const CACHE_PREPROCESS: &str = "preprocess.toml";

/// A preprocessed corpus as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Cache {
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    pub preprocess: PreprocessConfig,
}

fn slice_file_name(t: usize) -> String {
    format!("slice-{t:04}.tokens")
}

/// Token stream of one slice: `V <vocab size> N <tokens>` on the first
/// line, then the ids separated by spaces.
pub fn tokens_text(slice: &Slice, vocab_size: usize) -> String {
    let mut out = String::with_capacity(slice.tokens.len() * 5 + 32);
    let _ = writeln!(out, "V {} N {}", vocab_size, slice.tokens.len());
    for (i, id) in slice.tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{id}");
    }
    out.push('\n');
    out
}

pub fn parse_tokens(path: &Path, text: &str, vocab_size: usize) -> AppResult<Vec<u32>> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let h: Vec<&str> = header.split_whitespace().collect();
    let (v, n) = match h.as_slice() {
        ["V", v, "N", n] => (v.parse::<usize>().ok(), n.parse::<usize>().ok()),
        _ => (None, None),
    };
    let (Some(v), Some(n)) = (v, n) else {
        return Err(AppError::parse(
            path,
            "first line must be `V <int> N <int>`",
        ));
    };
    if v != vocab_size {
        return Err(AppError::parse(
            path,
            format!("header says V {v} but the vocabulary has {vocab_size} types"),
        ));
    }
    let ids = body
        .split_ascii_whitespace()
        .map(|s| s.parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| AppError::parse(path, "token ids must be non-negative integers"))?;
    if ids.len() != n {
        return Err(AppError::parse(
            path,
            format!("header says N {n} but {} ids follow", ids.len()),
        ));
    }
    Ok(ids)
}

pub fn write_cache(dir: &Path, cache: &Cache) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let v = cache.vocab.len();
    write_file(&dir.join(CACHE_VOCAB), vocab_tsv(&cache.vocab))?;
    write_file(
        &dir.join(CACHE_PREPROCESS),
        preprocess_toml(&cache.preprocess),
    )?;
    let mut index = String::from("index\tlabel\tfile\ttokens\n");
    for (t, s) in cache.corpus.slices().iter().enumerate() {
        let name = slice_file_name(t);
        write_file(&dir.join(&name), tokens_text(s, v))?;
        let _ = writeln!(index, "{t}\t{}\t{name}\t{}", s.label, s.tokens.len());
    }
    write_file(&dir.join(CACHE_SLICES), index)
}

pub fn read_cache(dir: &Path) -> AppResult<Cache> {
    let vocab_path = dir.join(CACHE_VOCAB);
    let vocab = parse_vocab_tsv(&vocab_path, &read_string(&vocab_path)?)?;
    let preprocess = read_preprocess_toml(&dir.join(CACHE_PREPROCESS))?;
    let index_path = dir.join(CACHE_SLICES);
    let index = read_string(&index_path)?;
    let mut slices = Vec::new();
    for (n, line) in index.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [_, label, file, _] = fields.as_slice() else {
            return Err(AppError::parse(
                &index_path,
                format!(
                    "line {}: expected index<TAB>label<TAB>file<TAB>tokens",
                    n + 1
                ),
            ));
        };
        let path = dir.join(file);
        let tokens = parse_tokens(&path, &read_string(&path)?, vocab.len())?;
        slices.push(Slice {
            label: label.to_string(),
            tokens,
        });
    }
    let corpus = Corpus::new(slices, vocab.len())?;
    Ok(Cache {
        corpus,
        vocab,
        preprocess,
    })
}

// ---------------------------------------------------------------- models

#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Static(EmbeddingModel),
    Dynamic(DynamicModel),
}

impl AnyModel {
    pub fn vocab_size(&self) -> usize {
        match self {
            AnyModel::Static(m) => m.vocab_size(),
            AnyModel::Dynamic(m) => m.vocab_size(),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            AnyModel::Static(m) => m.dims(),
            AnyModel::Dynamic(m) => m.dims(),
        }
    }

    /// The static model, or slice `t` of a dynamic one.
    pub fn slice(&self, t: usize) -> AppResult<EmbeddingModel> {
        match self {
            AnyModel::Static(m) if t == 0 => Ok(m.clone()),
            AnyModel::Dynamic(m) if t < m.num_slices() => Ok(m.slice(t)),
            _ => Err(AppError::Config(format!("the model has no slice {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub words: WordList,
    pub model: AnyModel,
}

fn write_block(out: &mut String, words: &[String], m: &Matrix) {
    for (r, w) in words.iter().enumerate() {
        out.push_str(w);
        for x in m.row(r) {
            let _ = write!(out, " {x:.16e}");
        }
        out.push('\n');
    }
}

/// Plain-text model: a header `V K` (static) or `V K T` (dynamic), then one
/// line `word v_1 ... v_K` per word and matrix. Static models list `rho`
/// then `alpha`; dynamic models list `rho` for slices `0..T` then `alpha`.
/// Values carry 17 significant digits, so they read back bit-exactly.
pub fn model_text(words: &[String], model: &AnyModel) -> String {
    let (v, k) = (model.vocab_size(), model.dims());
    assert_eq!(words.len(), v, "one word per row");
    let mut out = String::new();
    match model {
        AnyModel::Static(m) => {
            let _ = writeln!(out, "{v} {k}");
            write_block(&mut out, words, &m.rho);
            write_block(&mut out, words, &m.alpha);
        }
        AnyModel::Dynamic(m) => {
            let _ = writeln!(out, "{v} {k} {}", m.num_slices());
            for r in &m.rho {
                write_block(&mut out, words, r);
            }
            write_block(&mut out, words, &m.alpha);
        }
    }
    out
}

pub fn parse_model(path: &Path, text: &str) -> AppResult<ModelFile> {
    let mut lines = text.lines();
    let header: Vec<usize> = lines
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| AppError::parse(path, "header must be `V K` or `V K T`"))?;
    let (v, k, t) = match header.as_slice() {
        [v, k] => (*v, *k, None),
        [v, k, t] => (*v, *k, Some(*t)),
        _ => return Err(AppError::parse(path, "header must be `V K` or `V K T`")),
    };
    if v == 0 || k == 0 || t == Some(0) {
        return Err(AppError::parse(path, "V, K and T must be positive"));
    }
    let blocks = t.unwrap_or(1) + 1;
    let mut words: Vec<String> = Vec::with_capacity(v);
    let mut mats = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let mut data = Vec::with_capacity(v * k);
        for r in 0..v {
            let line_no = 2 + b * v + r;
            let err = |m: &str| AppError::parse(path, format!("line {line_no}: {m}"));
            let line = lines.next().ok_or_else(|| err("unexpected end of file"))?;
            let mut fields = line.split(' ');
            let word = fields.next().unwrap_or("");
            if b == 0 {
                words.push(word.to_string());
            } else if words[r] != word {
                return Err(err("word order differs between blocks"));
            }
            let before = data.len();
            for f in fields {
                data.push(f.parse::<f64>().map_err(|_| err("malformed number"))?);
            }
            if data.len() - before != k {
                return Err(err("wrong number of values"));
            }
        }
        mats.push(Matrix::from_vec(v, k, data)?);
    }
    if lines.next().is_some_and(|l| !l.is_empty()) {
        return Err(AppError::parse(path, "trailing lines after the last block"));
    }
    let words = WordList::new(words).ok_or_else(|| AppError::parse(path, "duplicate word"))?;
    let alpha = mats.pop().expect("at least two blocks");
    let model = match t {
        None => AnyModel::Static(EmbeddingModel::new(mats.remove(0), alpha)?),
        Some(_) => AnyModel::Dynamic(DynamicModel::new(mats, alpha)?),
    };
    Ok(ModelFile { words, model })
}

pub fn read_model(path: &Path) -> AppResult<ModelFile> {
    parse_model(path, &read_string(path)?)
}

// ---------------------------------------------------------------- word lists

/// Hyperparameters carried by an anchor file. Unset keys fall back to the
/// run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBlock {
    pub kind: Option<String>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub omega: Option<f64>,
    pub psi: Option<f64>,
    pub neutral: Option<bool>,
}

/// Anchor or hold-out word lists:
///
/// ```toml
/// positive = ["man", "he"]
/// negative = ["woman", "she"]
/// neutral = ["the", "a"]        # anchors only
///
/// [prior]                       # optional, anchors only
/// kind = "standard-basis"
/// omega = 1.0
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordsFile {
    #[serde(default)]
    pub positive: Vec<String>,
    #[serde(default)]
    pub negative: Vec<String>,
    #[serde(default)]
    pub neutral: Vec<String>,
    #[serde(default)]
    pub prior: Option<PriorBlock>,
}

pub fn parse_words(origin: &Path, text: &str) -> AppResult<WordsFile> {
    toml::from_str(text).map_err(|e| AppError::parse(origin, e.to_string()))
}

pub fn parse_holdout(origin: &Path, text: &str) -> AppResult<WordsFile> {
    let w = parse_words(origin, text)?;
    if !w.neutral.is_empty() || w.prior.is_some() {
        return Err(AppError::parse(
            origin,
            "hold-out files contain only `positive` and `negative` lists",
        ));
    }
    Ok(w)
}

/// Antonym pairs, one `positive<TAB>negative` per line; blank lines and
/// lines starting with `#` are skipped.
pub fn parse_pairs(origin: &Path, text: &str) -> AppResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split('\t');
        match (f.next(), f.next(), f.next()) {
            (Some(p), Some(q), None) if !p.is_empty() && !q.is_empty() => {
                out.push((p.to_string(), q.to_string()))
            }
            _ => {
                return Err(AppError::parse(
                    origin,
                    format!("line {}: expected positive<TAB>negative", n + 1),
                ))
            }
        }
    }
    if out.is_empty() {
        return Err(AppError::parse(origin, "no antonym pairs"));
    }
    Ok(out)
}

// ---------------------------------------------------------------- reports

pub fn objective_tsv(epochs: &[EpochStats]) -> String {
    let mut out = String::from("epoch\tobjective\tlog_prior\tlog_likelihood\n");
    for e in epochs {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            e.epoch, e.objective, e.log_prior, e.log_likelihood
        );
    }
    out
}

/// Machine-readable evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub method: String,
    /// Slice evaluated, for dynamic models.
    pub slice: Option<String>,
    pub n: usize,
    pub accuracy_rho: f64,
    pub accuracy_alpha: f64,
    pub accuracy_joint: f64,
    pub ci_rho: [f64; 2],
    pub ci_alpha: [f64; 2],
    pub ci_joint: [f64; 2],
    pub z: f64,
    /// Requested hold-out words absent from the vocabulary.
    pub missing: Vec<String>,
    /// Requested hold-out words removed for overlapping anchors or each
    /// other.
    pub dropped: Vec<String>,
}

impl ReportSummary {
    pub fn new(
        method: &str,
        slice: Option<String>,
        report: &EvalReport,
        missing: &[String],
        dropped: &[String],
    ) -> Self {
        let pair = |(a, b): (f64, f64)| [a, b];
        ReportSummary {
            method: method.to_string(),
            slice,
            n: report.n,
            accuracy_rho: report.accuracy_rho,
            accuracy_alpha: report.accuracy_alpha,
            accuracy_joint: report.accuracy_joint,
            ci_rho: pair(report.ci_rho),
            ci_alpha: pair(report.ci_alpha),
            ci_joint: pair(report.ci_joint),
            z: report.z,
            missing: missing.to_vec(),
            dropped: dropped.to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain struct serializes");
        s.push('\n');
        s
    }
}

/// `word expected rho_sign alpha_sign` with signs written `+`, `-`, `0`.
pub fn per_word_tsv(report: &EvalReport) -> String {
    let mut out = String::from("word\texpected\trho_sign\talpha_sign\n");
    for w in &report.per_word {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            w.word,
            w.expected.symbol(),
            w.rho.symbol(),
            w.alpha.symbol()
        );
    }
    out
}

/// `slice_label value` rows for one word.
pub fn trajectory_tsv(rows: &[(String, f64)]) -> String {
    let mut out = String::from("slice_label\tvalue\n");
    for (label, v) in rows {
        let _ = writeln!(out, "{label}\t{v}");
    }
    out
}

/// `index label tokens` rows describing a run's slices.
pub fn slices_tsv(corpus: &Corpus) -> String {
    let mut out = String::from("index\tlabel\ttokens\n");
    for (t, s) in corpus.slices().iter().enumerate() {
        let _ = writeln!(out, "{t}\t{}\t{}", s.label, s.tokens.len());
    }
    out
}

/// Slice labels from a `slices.tsv` (run directory or cache).
pub fn parse_slice_labels(path: &Path, text: &str) -> AppResult<Vec<String>> {
    text.lines()
        .skip(1)
        .enumerate()
        .map(|(n, line)| {
            let mut f = line.split('\t');
            match (f.next().map(str::parse::<usize>), f.next()) {
                (Some(Ok(i)), Some(label)) if i == n => Ok(label.to_string()),
                _ => Err(AppError::parse(
                    path,
                    format!("line {}: malformed slice row", n + 2),
                )),
            }
        })
        .collect()
}

/// Resolved anchors and misses: `set requested form id` (form and id are
/// `-` for misses).
pub fn anchors_tsv(resolution: &anchorvec_core::AnchorResolution) -> String {
    let mut out = String::from("set\trequested\tform\tid\n");
    for r in &resolution.resolved {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.set, r.requested, r.form, r.id);
    }
    for (set, word) in &resolution.missing {
        let _ = writeln!(out, "{set}\t{word}\t-\t-");
    }
    out
}

/// Ids of resolved anchors listed in an `anchors.tsv`.
pub fn parse_anchor_ids(path: &Path, text: &str) -> AppResult<Vec<u32>> {
    let mut ids = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let id = line.split('\t').nth(3);
        match id {
            Some("-") => {}
            Some(s) => ids.push(
                s.parse()
                    .map_err(|_| AppError::parse(path, format!("line {}: bad id", n + 1)))?,
            ),
            None => return Err(AppError::parse(path, format!("line {}: missing id", n + 1))),
        }
    }
    Ok(ids)
}
