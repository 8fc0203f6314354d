//! Run configuration: one flat set of keys, read from a TOML file and
//! overridden by command-line flags of the same name (`sigma_d` in a file,
//! `--sigma-d` on the command line).

use std::path::{Path, PathBuf};

use anchorvec_core::synth::{Flip, PlantedSpec, SlicedSpec};
use anchorvec_core::{AdamConfig, PreprocessConfig, PriorKind, PriorParams, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::formats::{read_string, PriorBlock};

macro_rules! run_config {
    ($(
        $(#[doc = $doc:literal])*
        [$($arg:tt)*] $name:ident : $ty:ty = $default:expr;
    )*) => {
        /// Every configuration key. All keys are optional; unset keys take
        /// their documented default when the configuration is resolved.
        #[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RunConfig {
            $(
                $(#[doc = $doc])*
                #[arg(long, $($arg)*)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $name: Option<$ty>,
            )*
        }

        impl RunConfig {
            /// Keys set in `over` replace those in `self`.
            pub fn merge(mut self, over: RunConfig) -> RunConfig {
                $(
                    if over.$name.is_some() {
                        self.$name = over.$name;
                    }
                )*
                self
            }

            fn fill_defaults(&mut self) {
                $(
                    if self.$name.is_none() {
                        self.$name = $default;
                    }
                )*
            }
        }
    };
}

run_config! {
    /// Corpus manifest: TOML with `[[slice]]` tables holding `label` and
    /// `files` (a glob or list of globs relative to the manifest).
    [value_name = "PATH"] manifest: PathBuf = None;
    /// Token cache directory written by `preprocess` and read by training.
    [value_name = "DIR"] cache_dir: PathBuf = None;
    /// Where run directories (training) or reports (evaluation, synth) go.
    /// Training defaults to `runs`; evaluation to the model's directory.
    [value_name = "DIR"] out_dir: PathBuf = None;
    /// Serialized model file to evaluate.
    [value_name = "PATH"] model: PathBuf = None;
    /// Anchor word file (TOML: `positive`, `negative`, `neutral` lists and
    /// an optional `[prior]` block).
    [value_name = "PATH"] anchors: PathBuf = None;
    /// Hold-out word file (TOML: `positive` and `negative` lists).
    [value_name = "PATH"] holdout: PathBuf = None;
    /// Antonym pairs for the subtraction baseline, `positive<TAB>negative`
    /// per line.
    [value_name = "PATH"] pairs: PathBuf = None;
    /// Built-in anchor, hold-out and pair lists used when no file is given:
    /// `gender` or `sentiment`.
    [value_name = "NAME"] dimension: String = None;
    /// Which built-in anchor list: `few` or `many` [default: many].
    [value_name = "NAME"] anchor_set: String = Some("many".into());
    /// Words whose trajectories are exported (comma-separated).
    [value_name = "WORD", value_delimiter = ','] words: Vec<String> = None;
    /// Slice of a dynamic model evaluated by `eval`/`eval-sota` [default: 0].
    [value_name = "INDEX"] eval_slice: usize = Some(0);

    /// Lowercase text [default: true].
    [num_args = 0..=1, default_missing_value = "true", value_name = "BOOL"] lowercase: bool = Some(true);
    /// Remove punctuation characters [default: true].
    [num_args = 0..=1, default_missing_value = "true", value_name = "BOOL"] strip_punctuation: bool = Some(true);
    /// Token replacing every number [default: X].
    [value_name = "TOKEN"] number_token: String = Some("X".into());
    /// Apply the Porter stemmer [default: true].
    [num_args = 0..=1, default_missing_value = "true", value_name = "BOOL"] stem: bool = Some(true);
    /// Number of most frequent word types kept [default: 10000].
    [value_name = "N"] vocab_max: usize = Some(10_000);
    /// Randomly drop frequent tokens [default: true].
    [num_args = 0..=1, default_missing_value = "true", value_name = "BOOL"] subsample: bool = Some(true);
    /// Subsampling threshold t; a token is dropped with probability
    /// 1 - sqrt(t / f) [default: 1e-5].
    [value_name = "T"] subsample_threshold: f64 = Some(1e-5);

    /// Embedding size K; the last dimension is the interpretable one
    /// [default: 100].
    [value_name = "K"] dims: usize = Some(100);
    /// Context tokens per position, half on each side; even [default: 8].
    [value_name = "N"] window: usize = Some(8);
    /// Negative samples per observed token [default: 10].
    [value_name = "N"] neg_count: usize = Some(10);
    /// Exponent on unigram counts for negative sampling [default: 0.75].
    [value_name = "X"] neg_power: f64 = Some(0.75);
    /// Passes over the corpus [default: 20].
    [value_name = "N"] epochs: usize = Some(20);
    /// Token positions per minibatch [default: 1000].
    [value_name = "N"] batch_size: usize = Some(1000);
    /// Adam step size [default: 0.01].
    [value_name = "X"] learning_rate: f64 = Some(1e-2);
    /// Adam first-moment decay [default: 0.9].
    [value_name = "X"] adam_beta1: f64 = Some(0.9);
    /// Adam second-moment decay [default: 0.999].
    [value_name = "X"] adam_beta2: f64 = Some(0.999);
    /// Adam denominator offset [default: 1e-8].
    [value_name = "X"] adam_eps: f64 = Some(1e-8);
    /// Random-walk variance between slices of a dynamic model
    /// [default: sigma / 100].
    [value_name = "VAR"] sigma_d: f64 = None;
    /// Seed for subsampling, initialization and negative sampling
    /// [default: 0].
    [value_name = "N"] seed: u64 = Some(0);
    /// Standard deviation of the random initialization [default: 0.1].
    [value_name = "X"] init_scale: f64 = Some(0.1);
    /// Margin kept between truncated anchors and zero [default: 1e-8].
    [value_name = "X"] support_eps: f64 = Some(1e-8);
    /// Steps between checks for non-finite parameters [default: 100].
    [value_name = "N"] divergence_check_every: u64 = Some(100);
    /// Worker threads; above 1, batches of a round are evaluated in
    /// parallel against one parameter snapshot [default: 1].
    [value_name = "N"] threads: usize = Some(1);

    /// Prior on the interpretable dimension: `none`, `standard-basis` or
    /// `truncated` [default: standard-basis].
    [value_name = "KIND"] prior: String = Some("standard-basis".into());
    /// Variance of the base Gaussian prior [default: 1].
    [value_name = "VAR"] sigma: f64 = Some(1.0);
    /// Anchor variance on the interpretable dimension [default: 1e-6 for
    /// standard-basis, 1000 for truncated].
    [value_name = "VAR"] gamma: f64 = None;
    /// Anchor variance on the other dimensions; 1e-6 is strict, 1 is weak
    /// [default: 1].
    [value_name = "VAR"] omega: f64 = Some(PriorParams::WEAK_OMEGA);
    /// Neutral-word variance on the interpretable dimension [default: 0.01].
    [value_name = "VAR"] psi: f64 = Some(PriorParams::NEUTRAL_PSI);
    /// Place the neutral prior on the anchor file's neutral words
    /// [default: false].
    [num_args = 0..=1, default_missing_value = "true", value_name = "BOOL"] neutral: bool = Some(false);

    /// Confidence-interval multiplier [default: 1.96].
    [value_name = "Z"] z: f64 = Some(1.96);

    /// Synthetic vocabulary size [default: 500].
    [value_name = "N"] synth_vocab: usize = Some(500);
    /// Synthetic signal types, half per polarity [default: 100].
    [value_name = "N"] synth_signal: usize = Some(100);
    /// Synthetic documents per slice [default: 2000].
    [value_name = "N"] synth_docs: usize = Some(2000);
    /// Tokens per synthetic document [default: 100].
    [value_name = "N"] synth_doc_len: usize = Some(100);
    /// Probability a token comes from its document's signal pool
    /// [default: 0.7].
    [value_name = "P"] synth_mix: f64 = Some(0.7);
    /// Power-law exponent for neutral tokens [default: uniform].
    [value_name = "S"] synth_zipf: f64 = None;
    /// Number of synthetic slices [default: 1].
    [value_name = "N"] synth_slices: usize = Some(1);
    /// Polarity flips as `index@slice` (comma-separated).
    [value_name = "FLIP", value_delimiter = ','] synth_flips: Vec<String> = None;
    /// Reuse slice 0's documents in every slice [default: false].
    [num_args = 0..=1, default_missing_value = "true", value_name = "BOOL"] synth_repeat: bool = Some(false);
    /// Anchor words per side written to the synthetic anchor file
    /// [default: 20].
    [value_name = "N"] synth_anchors: usize = Some(20);
}

pub fn load_config_file(path: &Path) -> AppResult<RunConfig> {
    let text = read_string(path)?;
    toml::from_str(&text).map_err(|e| AppError::parse(path, e.to_string()))
}

fn bad(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

impl RunConfig {
    /// Fills `prior` keys still unset from an anchor file's `[prior]` block.
    pub fn apply_prior_block(&mut self, block: &PriorBlock) {
        if self.prior.is_none() {
            self.prior = block.kind.clone();
        }
        for (dst, src) in [
            (&mut self.sigma, block.sigma),
            (&mut self.gamma, block.gamma),
            (&mut self.omega, block.omega),
            (&mut self.psi, block.psi),
        ] {
            if dst.is_none() {
                *dst = src;
            }
        }
        if self.neutral.is_none() {
            self.neutral = block.neutral;
        }
    }

    /// Fills defaults and validates every key.
    pub fn resolve(mut self) -> AppResult<RunConfig> {
        self.fill_defaults();
        if self.gamma.is_none() {
            self.gamma = Some(PriorParams::default_gamma(self.prior_kind()?));
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> AppResult<()> {
        self.preprocess_config().validate()?;
        self.train_config().validate()?;
        self.prior_params()?.validate()?;
        if let Some(d) = &self.dimension {
            if d != "gender" && d != "sentiment" {
                return Err(bad(format!(
                    "dimension must be gender or sentiment, got {d:?}"
                )));
            }
        }
        let set = self.anchor_set.as_deref().unwrap_or("many");
        if set != "few" && set != "many" {
            return Err(bad(format!("anchor_set must be few or many, got {set:?}")));
        }
        if self.threads == Some(0) {
            return Err(bad("threads must be positive"));
        }
        if !self.z.is_some_and(|z| z > 0.0 && z.is_finite()) {
            return Err(bad("z must be positive"));
        }
        if self.seed.is_some_and(|s| s > i64::MAX as u64) {
            return Err(bad("seed must fit in a signed 64-bit integer"));
        }
        self.planted_spec()?.base.validate()?;
        Ok(())
    }

    pub fn prior_kind(&self) -> AppResult<PriorKind> {
        let name = self.prior.as_deref().unwrap_or("standard-basis");
        PriorKind::parse(name).ok_or_else(|| {
            bad(format!(
                "prior must be none, standard-basis or truncated, got {name:?}"
            ))
        })
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        let d = PreprocessConfig::default();
        PreprocessConfig {
            lowercase: self.lowercase.unwrap_or(d.lowercase),
            strip_punctuation: self.strip_punctuation.unwrap_or(d.strip_punctuation),
            number_token: self.number_token.clone().unwrap_or(d.number_token),
            stem: self.stem.unwrap_or(d.stem),
            vocab_max: self.vocab_max.unwrap_or(d.vocab_max),
            subsample: self.subsample.unwrap_or(d.subsample),
            subsample_threshold: self.subsample_threshold.unwrap_or(d.subsample_threshold),
            seed: self.seed.unwrap_or(d.seed),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        let a = AdamConfig::default();
        TrainConfig {
            dims: self.dims.unwrap_or(d.dims),
            window: self.window.unwrap_or(d.window),
            neg_count: self.neg_count.unwrap_or(d.neg_count),
            neg_power: self.neg_power.unwrap_or(d.neg_power),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            adam: AdamConfig {
                learning_rate: self.learning_rate.unwrap_or(a.learning_rate),
                beta1: self.adam_beta1.unwrap_or(a.beta1),
                beta2: self.adam_beta2.unwrap_or(a.beta2),
                eps: self.adam_eps.unwrap_or(a.eps),
            },
            sigma_d: self.sigma_d,
            seed: self.seed.unwrap_or(d.seed),
            init_scale: self.init_scale.unwrap_or(d.init_scale),
            support_eps: self.support_eps.unwrap_or(d.support_eps),
            divergence_check_every: self
                .divergence_check_every
                .unwrap_or(d.divergence_check_every),
        }
    }

    pub fn prior_params(&self) -> AppResult<PriorParams> {
        let kind = self.prior_kind()?;
        Ok(PriorParams {
            kind,
            use_neutral: self.neutral.unwrap_or(false),
            sigma: self.sigma.unwrap_or(1.0),
            gamma: self.gamma.unwrap_or(PriorParams::default_gamma(kind)),
            omega: self.omega.unwrap_or(PriorParams::WEAK_OMEGA),
            psi: self.psi.unwrap_or(PriorParams::NEUTRAL_PSI),
        })
    }

    pub fn planted_spec(&self) -> AppResult<SlicedSpec> {
        let flips = self
            .synth_flips
            .iter()
            .flatten()
            .map(|f| parse_flip(f))
            .collect::<AppResult<Vec<_>>>()?;
        let slices = self.synth_slices.unwrap_or(1);
        if slices == 0 {
            return Err(bad("synth_slices must be positive"));
        }
        Ok(SlicedSpec {
            base: PlantedSpec {
                vocab_size: self.synth_vocab.unwrap_or(500),
                n_signal: self.synth_signal.unwrap_or(100),
                n_docs: self.synth_docs.unwrap_or(2000),
                doc_len: self.synth_doc_len.unwrap_or(100),
                mix: self.synth_mix.unwrap_or(0.7),
                seed: self.seed.unwrap_or(0),
                zipf: self.synth_zipf,
            },
            slices,
            flips,
            repeat_data: self.synth_repeat.unwrap_or(false),
        })
    }

    /// The resolved configuration as TOML. Feeding it back through
    /// `--config` reproduces the run.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }
}

fn parse_flip(s: &str) -> AppResult<Flip> {
    let parsed = s
        .split_once('@')
        .and_then(|(i, t)| Some((i.trim().parse().ok()?, t.trim().parse().ok()?)));
    match parsed {
        Some((index, from_slice)) => Ok(Flip { index, from_slice }),
        None => Err(bad(format!(
            "synth flip must look like index@slice, got {s:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::default().resolve().unwrap();
        assert_eq!(c.train_config(), TrainConfig::default());
        assert_eq!(c.preprocess_config(), PreprocessConfig::default());
        assert_eq!(
            c.prior_params().unwrap(),
            PriorParams::standard_basis_weak()
        );
    }

    #[test]
    fn gamma_default_follows_kind() {
        let c = RunConfig {
            prior: Some("truncated".into()),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(c.gamma, Some(1000.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("dims = 3\nbogus = 1\n").is_err());
        assert!(toml::from_str::<RunConfig>("dims = 3\n").is_ok());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for c in [
            RunConfig {
                window: Some(3),
                ..Default::default()
            },
            RunConfig {
                prior: Some("gaussian".into()),
                ..Default::default()
            },
            RunConfig {
                omega: Some(-1.0),
                ..Default::default()
            },
            RunConfig {
                dimension: Some("colour".into()),
                ..Default::default()
            },
            RunConfig {
                threads: Some(0),
                ..Default::default()
            },
            RunConfig {
                synth_signal: Some(7),
                ..Default::default()
            },
            RunConfig {
                synth_flips: Some(vec!["3".into()]),
                ..Default::default()
            },
            RunConfig {
                vocab_max: Some(1),
                ..Default::default()
            },
        ] {
            assert!(c.clone().resolve().is_err(), "{c:?}");
        }
    }

    #[test]
    fn merge_prefers_overrides_and_block_fills_gaps() {
        let file = RunConfig {
            dims: Some(10),
            omega: Some(1e-6),
            ..Default::default()
        };
        let cli = RunConfig {
            dims: Some(20),
            ..Default::default()
        };
        let mut c = file.merge(cli);
        c.apply_prior_block(&PriorBlock {
            kind: Some("truncated".into()),
            omega: Some(5.0),
            ..Default::default()
        });
        let c = c.resolve().unwrap();
        assert_eq!(c.dims, Some(20));
        assert_eq!(c.omega, Some(1e-6));
        assert_eq!(c.prior_kind().unwrap(), PriorKind::Truncated);
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig {
            sigma_d: Some(0.05),
            subsample_threshold: Some(1e-5),
            synth_flips: Some(vec!["0@2".into()]),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
