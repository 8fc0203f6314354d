//! The subcommands, callable from tests as well as from the binary. Each
//! takes the merged (file + command line) configuration, resolves and
//! validates it before touching any data, and returns what it wrote.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anchorvec_core::eval::{resolve_holdout, HoldoutSet, ResolvedHoldout};
use anchorvec_core::synth::{generate_sliced, Polarity};
use anchorvec_core::trainer::{
    train_dynamic_with, train_with, BatchExecutor, EpochStats, SerialExecutor, TrainObserver,
};
use anchorvec_core::{
    assemble_corpus, holdout_accuracy, resolve_anchors, resolve_pairs, sota_accuracy, sota_axis,
    trajectory, AnchorRequest, AnchorResolution, AnchorSpec, Lexicon, Matrix, PreprocessConfig,
    PriorKind,
};

use crate::config::RunConfig;
use crate::data;
use crate::error::{AppError, AppResult};
use crate::formats::{
    anchors_tsv, model_text, objective_tsv, parse_anchor_ids, parse_holdout, parse_pairs,
    parse_slice_labels, parse_words, per_word_tsv, preprocess_toml, read_cache, read_model,
    read_preprocess_toml, read_string, slices_tsv, trajectory_tsv, write_cache, write_file,
    AnyModel, Cache, ReportSummary, WordsFile, CACHE_PREPROCESS,
};
use crate::parallel::RayonExecutor;
use crate::run::create_run_dir;

fn require<'a, T>(value: &'a Option<T>, key: &str, command: &str) -> AppResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| AppError::Config(format!("`{command}` needs `{key}`")))
}

// ---------------------------------------------------------------- preprocess

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub cache_dir: PathBuf,
    pub vocab_size: usize,
    /// Tokens after normalization, per slice.
    pub raw_tokens: Vec<usize>,
    /// In-vocabulary tokens before subsampling, all slices.
    pub in_vocab_tokens: u64,
    /// Tokens kept after subsampling, per slice.
    pub kept_tokens: Vec<usize>,
}

pub fn preprocess(cfg: RunConfig) -> AppResult<PreprocessSummary> {
    let cfg = cfg.resolve()?;
    let manifest = require(&cfg.manifest, "manifest", "preprocess")?;
    let cache_dir = require(&cfg.cache_dir, "cache_dir", "preprocess")?.clone();
    let pcfg = cfg.preprocess_config();
    let texts = crate::formats::load_corpus(manifest, &pcfg)?;
    let raw_tokens: Vec<usize> = texts.iter().map(|(_, t)| t.len()).collect();
    let (corpus, vocab) = assemble_corpus(texts, &pcfg)?;
    let summary = PreprocessSummary {
        cache_dir: cache_dir.clone(),
        vocab_size: vocab.len(),
        raw_tokens,
        in_vocab_tokens: vocab.total_tokens(),
        kept_tokens: corpus.slices().iter().map(|s| s.tokens.len()).collect(),
    };
    write_cache(
        &cache_dir,
        &Cache {
            corpus,
            vocab,
            preprocess: pcfg,
        },
    )?;
    Ok(summary)
}

impl PreprocessSummary {
    pub fn describe(&self, labels: &[String]) -> String {
        let mut out = format!(
            "vocabulary: {} types; {} in-vocabulary tokens before subsampling\n",
            self.vocab_size, self.in_vocab_tokens
        );
        for (t, (raw, kept)) in self.raw_tokens.iter().zip(&self.kept_tokens).enumerate() {
            let label = labels.get(t).map(String::as_str).unwrap_or("?");
            let _ = writeln!(
                out,
                "slice {label}: {raw} tokens -> {kept} after subsampling"
            );
        }
        let _ = write!(out, "cache written to {}", self.cache_dir.display());
        out
    }
}

// ---------------------------------------------------------------- word lists

fn origin(name: &str) -> PathBuf {
    PathBuf::from(format!("<built-in {name}>"))
}

/// The anchor file: explicit path, else the built-in list for `dimension`.
fn load_anchor_words(cfg: &RunConfig) -> AppResult<Option<WordsFile>> {
    if let Some(path) = &cfg.anchors {
        return Ok(Some(parse_words(path, &read_string(path)?)?));
    }
    if let Some(d) = &cfg.dimension {
        let set = cfg.anchor_set.as_deref().unwrap_or("many");
        let text = data::anchors(d, set)
            .ok_or_else(|| AppError::Config(format!("no built-in {set} anchors for {d:?}")))?;
        return Ok(Some(parse_words(
            &origin(&format!("{d}_{set}.toml")),
            text,
        )?));
    }
    Ok(None)
}

fn load_holdout_words(cfg: &RunConfig) -> AppResult<HoldoutSet> {
    let w = if let Some(path) = &cfg.holdout {
        parse_holdout(path, &read_string(path)?)?
    } else if let Some(d) = &cfg.dimension {
        let text = data::holdout(d)
            .ok_or_else(|| AppError::Config(format!("no built-in hold-out list for {d:?}")))?;
        parse_holdout(&origin(&format!("{d}_holdout.toml")), text)?
    } else {
        return Err(AppError::Config(
            "evaluation needs `holdout` or `dimension`".into(),
        ));
    };
    Ok(HoldoutSet {
        positive: w.positive,
        negative: w.negative,
    })
}

fn load_pairs(cfg: &RunConfig) -> AppResult<Vec<(String, String)>> {
    if let Some(path) = &cfg.pairs {
        return parse_pairs(path, &read_string(path)?);
    }
    if let Some(d) = &cfg.dimension {
        let text = data::pairs(d)
            .ok_or_else(|| AppError::Config(format!("no built-in pairs for {d:?}")))?;
        return parse_pairs(&origin(&format!("{d}_pairs.tsv")), text);
    }
    Err(AppError::Config(
        "`eval-sota` needs `pairs` or `dimension`".into(),
    ))
}

// ---------------------------------------------------------------- training

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub run_dir: PathBuf,
    pub epochs: Vec<EpochStats>,
    pub steps: u64,
    pub resolution: AnchorResolution,
}

struct Progress {
    epochs: usize,
}

impl TrainObserver for Progress {
    fn on_epoch(&mut self, s: &EpochStats) {
        eprintln!(
            "epoch {}/{}: objective {:.6e} (log prior {:.6e}, log likelihood {:.6e})",
            s.epoch, self.epochs, s.objective, s.log_prior, s.log_likelihood
        );
    }
}

/// Hooks for callers that need to watch every optimizer step.
pub type StepHook<'a> = &'a mut dyn FnMut(u64, &[Matrix], &Matrix);

struct Observers<'a> {
    progress: Progress,
    hook: Option<StepHook<'a>>,
}

impl TrainObserver for Observers<'_> {
    fn on_step(&mut self, step: u64, rho: &[Matrix], alpha: &Matrix) {
        if let Some(h) = self.hook.as_mut() {
            h(step, rho, alpha);
        }
    }

    fn on_epoch(&mut self, s: &EpochStats) {
        self.progress.on_epoch(s);
    }
}

fn executor(threads: usize) -> AppResult<Box<dyn BatchExecutor>> {
    Ok(if threads <= 1 {
        Box::new(SerialExecutor)
    } else {
        Box::new(RayonExecutor::new(threads)?)
    })
}

/// Resolves anchors against a vocabulary. Without an anchor file the model
/// is unanchored, which only the `none` prior allows.
fn anchor_spec(
    cfg: &RunConfig,
    words: Option<&WordsFile>,
    lexicon: &dyn Lexicon,
    pcfg: &PreprocessConfig,
) -> AppResult<(AnchorSpec, AnchorResolution)> {
    let params = cfg.prior_params()?;
    let dims = cfg.train_config().dims;
    match words {
        Some(w) => {
            let request = AnchorRequest {
                positive: w.positive.clone(),
                negative: w.negative.clone(),
                neutral: w.neutral.clone(),
            };
            Ok(resolve_anchors(lexicon, &request, params, dims, pcfg)?)
        }
        None if params.kind == PriorKind::None && !params.use_neutral => Ok((
            AnchorSpec::new(
                lexicon.len(),
                dims,
                Default::default(),
                Default::default(),
                Default::default(),
                params,
            )?,
            AnchorResolution::default(),
        )),
        None => Err(AppError::Config(
            "training with an anchored prior needs `anchors` or `dimension`".into(),
        )),
    }
}

pub fn train(cfg: RunConfig, dynamic: bool) -> AppResult<TrainSummary> {
    train_observed(cfg, dynamic, None)
}

/// Trains and writes a run directory with `config.toml` (the resolved
/// configuration), `objective.tsv`, `model.txt`, `anchors.tsv`,
/// `slices.tsv` and `preprocess.toml`.
pub fn train_observed(
    mut cfg: RunConfig,
    dynamic: bool,
    hook: Option<StepHook<'_>>,
) -> AppResult<TrainSummary> {
    let command = if dynamic { "train-dynamic" } else { "train" };
    let words = load_anchor_words(&cfg)?;
    if let Some(block) = words.as_ref().and_then(|w| w.prior.as_ref()) {
        cfg.apply_prior_block(block);
    }
    let cfg = cfg.resolve()?;
    let cache_dir = require(&cfg.cache_dir, "cache_dir", command)?;
    let cache = read_cache(cache_dir)?;
    let (spec, resolution) = anchor_spec(&cfg, words.as_ref(), &cache.vocab, &cache.preprocess)?;
    for (set, word) in &resolution.missing {
        eprintln!("anchor not in vocabulary ({set}): {word}");
    }
    let tcfg = cfg.train_config();
    let exec = executor(cfg.threads.unwrap_or(1))?;
    let mut obs = Observers {
        progress: Progress {
            epochs: tcfg.epochs,
        },
        hook,
    };
    let words_in_order: Vec<String> = cache.vocab.words().map(str::to_owned).collect();
    let (model, epochs, steps) = if dynamic {
        let out = train_dynamic_with(
            &cache.corpus,
            &cache.vocab,
            &tcfg,
            &spec,
            exec.as_ref(),
            &mut obs,
        )?;
        (AnyModel::Dynamic(out.model), out.epochs, out.steps)
    } else {
        let out = train_with(
            &cache.corpus,
            &cache.vocab,
            &tcfg,
            &spec,
            exec.as_ref(),
            &mut obs,
        )?;
        (AnyModel::Static(out.model), out.epochs, out.steps)
    };

    let parent = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let run_dir = create_run_dir(&parent, command)?;
    write_file(&run_dir.join("config.toml"), cfg.to_toml())?;
    write_file(&run_dir.join("objective.tsv"), objective_tsv(&epochs))?;
    write_file(
        &run_dir.join("model.txt"),
        model_text(&words_in_order, &model),
    )?;
    write_file(&run_dir.join("anchors.tsv"), anchors_tsv(&resolution))?;
    write_file(&run_dir.join("slices.tsv"), slices_tsv(&cache.corpus))?;
    write_file(
        &run_dir.join(CACHE_PREPROCESS),
        preprocess_toml(&cache.preprocess),
    )?;
    Ok(TrainSummary {
        run_dir,
        epochs,
        steps,
        resolution,
    })
}

// ---------------------------------------------------------------- evaluation

fn model_dir(model: &Path) -> PathBuf {
    model.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Preprocessing settings recorded next to the model, else the configured
/// ones.
fn model_preprocess(cfg: &RunConfig, dir: &Path) -> AppResult<PreprocessConfig> {
    let p = dir.join(CACHE_PREPROCESS);
    if p.is_file() {
        read_preprocess_toml(&p)
    } else {
        Ok(cfg.preprocess_config())
    }
}

fn slice_labels(dir: &Path, slices: usize) -> AppResult<Vec<String>> {
    let p = dir.join("slices.tsv");
    let labels = if p.is_file() {
        parse_slice_labels(&p, &read_string(&p)?)?
    } else {
        Vec::new()
    };
    if labels.len() == slices {
        Ok(labels)
    } else {
        Ok((0..slices).map(|t| t.to_string()).collect())
    }
}

/// Anchor ids to keep out of the hold-out set: the run's `anchors.tsv`
/// when present, else the configured anchors resolved against the model.
fn anchor_exclusions(
    cfg: &RunConfig,
    dir: &Path,
    lexicon: &dyn Lexicon,
    pcfg: &PreprocessConfig,
) -> AppResult<BTreeSet<u32>> {
    let p = dir.join("anchors.tsv");
    if p.is_file() {
        return Ok(parse_anchor_ids(&p, &read_string(&p)?)?
            .into_iter()
            .collect());
    }
    let Some(words) = load_anchor_words(cfg)? else {
        return Ok(BTreeSet::new());
    };
    let mut ids = BTreeSet::new();
    for w in words
        .positive
        .iter()
        .chain(&words.negative)
        .chain(&words.neutral)
    {
        if let Some((_, id)) = anchorvec_core::priors::resolve_word(lexicon, w, pcfg) {
            ids.insert(id);
        }
    }
    Ok(ids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub report: ReportSummary,
    pub json_path: PathBuf,
    pub words_path: PathBuf,
}

/// Hold-out sign accuracy (`sota = false`) or the antonym-subtraction
/// baseline (`sota = true`). Writes `eval.json` + `eval_words.tsv` (or
/// `eval_sota.*`) into `out_dir`, defaulting to the model's directory.
pub fn eval(cfg: RunConfig, sota: bool) -> AppResult<EvalSummary> {
    let command = if sota { "eval-sota" } else { "eval" };
    let cfg = cfg.resolve()?;
    let model_path = require(&cfg.model, "model", command)?;
    let holdout_words = load_holdout_words(&cfg)?;
    let pairs = if sota { Some(load_pairs(&cfg)?) } else { None };
    let file = read_model(model_path)?;
    let dir = model_dir(model_path);
    let pcfg = model_preprocess(&cfg, &dir)?;
    let exclude = anchor_exclusions(&cfg, &dir, &file.words, &pcfg)?;
    let holdout: ResolvedHoldout = resolve_holdout(&file.words, &holdout_words, &exclude, &pcfg);
    for w in &holdout.missing {
        eprintln!("hold-out word not in vocabulary: {w}");
    }
    for w in &holdout.dropped {
        eprintln!("hold-out word dropped (anchor overlap or sign conflict): {w}");
    }
    if holdout.words.is_empty() {
        return Err(AppError::Config(format!(
            "no hold-out word resolved against {} ({} missing, {} dropped)",
            model_path.display(),
            holdout.missing.len(),
            holdout.dropped.len()
        )));
    }
    let t = cfg.eval_slice.unwrap_or(0);
    let model = file.model.slice(t)?;
    let slice = match &file.model {
        AnyModel::Static(_) => None,
        AnyModel::Dynamic(m) => Some(slice_labels(&dir, m.num_slices())?[t].clone()),
    };
    let z = cfg.z.unwrap_or(1.96);
    let report = match &pairs {
        None => holdout_accuracy(&model, &holdout, z)?,
        Some(pairs) => {
            let ids = resolve_pairs(&file.words, pairs, &pcfg)?;
            let axis = sota_axis(&model, &ids)?;
            sota_accuracy(&model, &axis, &holdout, z)?
        }
    };
    let method = if sota { "sota" } else { "anchored" };
    let summary = ReportSummary::new(method, slice, &report, &holdout.missing, &holdout.dropped);
    let out = cfg.out_dir.clone().unwrap_or(dir);
    fs::create_dir_all(&out).map_err(|e| AppError::io(&out, e))?;
    let stem = if sota { "eval_sota" } else { "eval" };
    let json_path = out.join(format!("{stem}.json"));
    let words_path = out.join(format!("{stem}_words.tsv"));
    write_file(&json_path, summary.to_json())?;
    write_file(&words_path, per_word_tsv(&report))?;
    Ok(EvalSummary {
        report: summary,
        json_path,
        words_path,
    })
}

// ---------------------------------------------------------------- trajectories

fn file_safe(word: &str) -> String {
    word.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `trajectory_<word>.tsv` for every resolvable word. Fails only if
/// none resolves.
pub fn trajectories(cfg: RunConfig) -> AppResult<Vec<(String, PathBuf)>> {
    let cfg = cfg.resolve()?;
    let model_path = require(&cfg.model, "model", "trajectory")?;
    let words = require(&cfg.words, "words", "trajectory")?;
    let file = read_model(model_path)?;
    let AnyModel::Dynamic(model) = &file.model else {
        return Err(AppError::Config(format!(
            "{} is not a dynamic model",
            model_path.display()
        )));
    };
    let dir = model_dir(model_path);
    let pcfg = model_preprocess(&cfg, &dir)?;
    let labels = slice_labels(&dir, model.num_slices())?;
    let out = cfg.out_dir.clone().unwrap_or(dir);
    fs::create_dir_all(&out).map_err(|e| AppError::io(&out, e))?;
    let mut written = Vec::new();
    let mut missing = Vec::new();
    for w in words {
        match trajectory(model, &labels, &file.words, w, &pcfg) {
            Ok(rows) => {
                let path = out.join(format!("trajectory_{}.tsv", file_safe(w)));
                write_file(&path, trajectory_tsv(&rows))?;
                written.push((w.clone(), path));
            }
            Err(anchorvec_core::Error::UnresolvedWord(_)) => {
                eprintln!("word not in vocabulary: {w}");
                missing.push(w.clone());
            }
            Err(e) => return Err(e.into()),
        }
    }
    if written.is_empty() {
        return Err(AppError::Config(format!(
            "none of the requested words resolved: {}",
            missing.join(", ")
        )));
    }
    Ok(written)
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub manifest: PathBuf,
    pub anchors: PathBuf,
    pub holdout: PathBuf,
    pub truth: PathBuf,
}

fn toml_list(words: &[&str]) -> String {
    let quoted: Vec<String> = words.iter().map(|w| format!("{w:?}")).collect();
    format!("[{}]", quoted.join(", "))
}

/// Writes a planted-dimension corpus: `manifest.toml` with one text file
/// per slice, `truth.tsv` (`word index polarity flip_from`), `anchors.toml`
/// (the first `synth_anchors` signal words of each polarity) and
/// `holdout.toml` (the remaining signal words).
pub fn synth(cfg: RunConfig) -> AppResult<SynthSummary> {
    let cfg = cfg.resolve()?;
    let out = require(&cfg.out_dir, "out_dir", "synth")?;
    let spec = cfg.planted_spec()?;
    let n_anchor = cfg.synth_anchors.unwrap_or(20);
    let half = spec.base.n_signal / 2;
    if n_anchor > half {
        return Err(AppError::Config(format!(
            "synth_anchors ({n_anchor}) exceeds the signal words per polarity ({half})"
        )));
    }
    let planted = generate_sliced(&spec)?;
    let text_dir = out.join("text");
    fs::create_dir_all(&text_dir).map_err(|e| AppError::io(&text_dir, e))?;
    let mut manifest = String::new();
    for (t, (label, _)) in planted.documents.iter().enumerate() {
        let name = format!("{label}.txt");
        write_file(&text_dir.join(&name), planted.slice_text(t))?;
        let _ = writeln!(
            manifest,
            "[[slice]]\nlabel = {label:?}\nfiles = \"text/{name}\"\n"
        );
    }
    let manifest_path = out.join("manifest.toml");
    write_file(&manifest_path, manifest)?;

    let mut truth = String::from("word\tindex\tpolarity\tflip_from\n");
    for (i, w) in planted.words.iter().enumerate() {
        let flip = spec
            .flips
            .iter()
            .find(|f| f.index == i)
            .map(|f| f.from_slice.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(truth, "{w}\t{i}\t{}\t{flip}", spec.base.polarity(i).name());
    }
    let truth_path = out.join("truth.tsv");
    write_file(&truth_path, truth)?;

    let pool = |p: Polarity| -> Vec<&str> {
        (0..spec.base.n_signal)
            .filter(|&i| spec.base.polarity(i) == p)
            .map(|i| planted.word(i))
            .collect()
    };
    let (pos, neg) = (pool(Polarity::Positive), pool(Polarity::Negative));
    let anchors_path = out.join("anchors.toml");
    write_file(
        &anchors_path,
        format!(
            "positive = {}\nnegative = {}\n",
            toml_list(&pos[..n_anchor]),
            toml_list(&neg[..n_anchor])
        ),
    )?;
    let holdout_path = out.join("holdout.toml");
    write_file(
        &holdout_path,
        format!(
            "positive = {}\nnegative = {}\n",
            toml_list(&pos[n_anchor..]),
            toml_list(&neg[n_anchor..])
        ),
    )?;
    Ok(SynthSummary {
        manifest: manifest_path,
        anchors: anchors_path,
        holdout: holdout_path,
        truth: truth_path,
    })
}
