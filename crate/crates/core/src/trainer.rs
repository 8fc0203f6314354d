//! MAP estimation by minibatch Adam ascent.
//!
//! Each step maximizes `batch log-likelihood + w * log prior`, where `w` is
//! the batch's share of all observed tokens, so one epoch counts the prior
//! exactly once. Truncated anchors are projected back into their support
//! after every step.
//!
//! The dynamic model adds a Gaussian random walk between consecutive
//! slices' embedding vectors. The base prior `N(0, sigma)` acts on slice 0
//! only; anchor and neutral priors act on every slice and on the shared
//! context vectors.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::adam::{AdamConfig, SparseAdam};
use crate::corpus::{Corpus, Slice};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::matrix::Matrix;
use crate::model::{
    count_windows, objective_and_grad_frozen, window_at, BatchGrad, DynamicModel, EmbeddingModel,
    NegativeSampler,
};
use crate::priors::{
    add_grad_log_prior, add_random_walk_grad, log_prior, log_prior_scoped, project_support,
    random_walk_log_prior, AnchorSpec, PriorKind, Role, RowScope,
};
use crate::rng::{derive_seed, seeded, standard_normal, SeededRng};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Embedding size K; the last dimension is the interpretable one.
    pub dims: usize,
    /// Total context tokens per position (half on each side).
    pub window: usize,
    /// Negative samples per observed token.
    pub neg_count: usize,
    /// Exponent on unigram counts for the negative distribution.
    pub neg_power: f64,
    pub epochs: usize,
    /// Positions per minibatch.
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Random-walk variance; `None` means `sigma / 100`.
    pub sigma_d: Option<f64>,
    pub seed: u64,
    /// Standard deviation of the random initialization.
    pub init_scale: f64,
    /// Margin kept between truncated anchors and zero.
    pub support_eps: f64,
    /// Steps between non-finite parameter checks.
    pub divergence_check_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dims: 100,
            window: 8,
            neg_count: 10,
            neg_power: 0.75,
            epochs: 20,
            batch_size: 1000,
            adam: AdamConfig::default(),
            sigma_d: None,
            seed: 0,
            init_scale: 0.1,
            support_eps: 1e-8,
            divergence_check_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dims == 0 {
            return bad(String::from("dims must be positive"));
        }
        if self.window < 2 || self.window % 2 != 0 {
            return bad(format!(
                "window must be an even integer >= 2, got {}",
                self.window
            ));
        }
        if self.neg_count == 0 {
            return bad(String::from("neg_count must be positive"));
        }
        if self.batch_size == 0 {
            return bad(String::from("batch_size must be positive"));
        }
        if self.divergence_check_every == 0 {
            return bad(String::from("divergence_check_every must be positive"));
        }
        if !self.neg_power.is_finite() {
            return bad(format!("neg_power must be finite, got {}", self.neg_power));
        }
        let a = &self.adam;
        for (name, v) in [
            ("learning_rate", a.learning_rate),
            ("adam_eps", a.eps),
            ("init_scale", self.init_scale),
            ("support_eps", self.support_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("adam_beta1", a.beta1), ("adam_beta2", a.beta2)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if let Some(sd) = self.sigma_d {
            if !(sd > 0.0 && sd.is_finite()) {
                return bad(format!("sigma_d must be positive, got {sd}"));
            }
        }
        Ok(())
    }

    pub fn effective_sigma_d(&self, sigma: f64) -> f64 {
        self.sigma_d.unwrap_or(sigma / 100.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch index.
    pub epoch: usize,
    pub objective: f64,
    pub log_prior: f64,
    /// Sum of minibatch log-likelihoods over the epoch.
    pub log_likelihood: f64,
    /// Sum of the per-batch prior weights (1 up to rounding).
    pub prior_weight: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub epochs: Vec<EpochStats>,
    pub steps: u64,
}

impl<M> TrainOutcome<M> {
    pub fn final_objective(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.objective)
    }
}

/// Hooks called by the training loop.
pub trait TrainObserver {
    /// After every optimizer step, once truncation support is enforced.
    fn on_step(&mut self, _step: u64, _rho: &[Matrix], _alpha: &Matrix) {}
    fn on_epoch(&mut self, _stats: &EpochStats) {}
}

impl TrainObserver for () {}

/// A contiguous range of positions within one slice, with its own
/// negative-sampling seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchJob {
    pub slice: usize,
    pub start: usize,
    pub end: usize,
    pub seed: u64,
}

/// Read-only state a batch is evaluated against.
pub struct EvalContext<'a> {
    pub slices: &'a [Slice],
    pub rho: &'a [Matrix],
    pub alpha: &'a Matrix,
    pub sampler: &'a NegativeSampler,
    pub window: usize,
    pub neg_count: usize,
}

/// Likelihood gradient of one batch against a parameter snapshot. Pure in
/// `(job, ctx)`.
pub fn evaluate_job(job: &BatchJob, ctx: &EvalContext<'_>) -> BatchGrad {
    let tokens = &ctx.slices[job.slice].tokens;
    let half = ctx.window / 2;
    let batch: Vec<_> = (job.start..job.end)
        .filter_map(|i| window_at(tokens, i, half))
        .collect();
    let mut rng: SeededRng = seeded(job.seed);
    let negatives: Vec<Vec<u32>> = batch
        .iter()
        .map(|w| {
            ctx.sampler
                .draw_excluding(ctx.neg_count, Some(w.center_id), &mut rng)
        })
        .collect();
    objective_and_grad_frozen(&batch, &ctx.rho[job.slice], ctx.alpha, &negatives)
}

/// Evaluates batches of a round. Results must come back in job order.
pub trait BatchExecutor {
    /// Jobs evaluated against one parameter snapshot before their
    /// gradients are applied (serially, in order). 1 means plain SGD order.
    fn round_size(&self) -> usize {
        1
    }

    fn evaluate(&self, jobs: &[BatchJob], ctx: &EvalContext<'_>) -> Vec<BatchGrad>;
}

/// Evaluates every batch on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialExecutor;

impl BatchExecutor for SerialExecutor {
    fn evaluate(&self, jobs: &[BatchJob], ctx: &EvalContext<'_>) -> Vec<BatchGrad> {
        jobs.iter().map(|j| evaluate_job(j, ctx)).collect()
    }
}

/// Random initialization with anchors placed at their prior modes.
///
/// Free entries are `N(0, init_scale^2)`. Standard-basis anchors get
/// `+-1` on the interpretable dimension and `N(0, min(omega, init_scale^2))`
/// elsewhere; truncated anchors get `+-init_scale` on the interpretable
/// dimension.
pub fn init_model(
    vocab_size: usize,
    cfg: &TrainConfig,
    spec: &AnchorSpec,
    rng: &mut SeededRng,
) -> Result<EmbeddingModel> {
    if vocab_size < 2 {
        return Err(Error::VocabularyTooSmall(vocab_size));
    }
    check_spec(vocab_size, cfg, spec)?;
    let rho = init_matrix(vocab_size, cfg, spec, rng);
    let alpha = init_matrix(vocab_size, cfg, spec, rng);
    EmbeddingModel::new(rho, alpha)
}

fn init_matrix(
    vocab_size: usize,
    cfg: &TrainConfig,
    spec: &AnchorSpec,
    rng: &mut SeededRng,
) -> Matrix {
    let k = spec.interpret_dim();
    let free_sd = cfg.init_scale;
    let anchor_sd = libm::sqrt(spec.params().omega.min(cfg.init_scale * cfg.init_scale));
    Matrix::from_fn(vocab_size, cfg.dims, |r, c| {
        let z = standard_normal(rng);
        let sign = match spec.role(r) {
            Role::Positive => 1.0,
            Role::Negative => -1.0,
            Role::Free | Role::Neutral => return free_sd * z,
        };
        if c != k {
            return anchor_sd * z;
        }
        match spec.kind() {
            PriorKind::StandardBasis => sign,
            PriorKind::Truncated => sign * cfg.init_scale,
            PriorKind::None => free_sd * z,
        }
    })
}

fn check_spec(vocab_size: usize, cfg: &TrainConfig, spec: &AnchorSpec) -> Result<()> {
    cfg.validate()?;
    if spec.vocab_size() != vocab_size || spec.dims() != cfg.dims {
        return Err(Error::ShapeMismatch {
            expected_rows: vocab_size,
            expected_cols: cfg.dims,
            rows: spec.vocab_size(),
            cols: spec.dims(),
        });
    }
    Ok(())
}

/// Static MAP fit. Windows never cross slice boundaries; a multi-slice
/// corpus is fit with a single set of embedding vectors.
pub fn train(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    spec: &AnchorSpec,
) -> Result<TrainOutcome<EmbeddingModel>> {
    train_with(corpus, vocab, cfg, spec, &SerialExecutor, &mut ())
}

pub fn train_with(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    spec: &AnchorSpec,
    executor: &dyn BatchExecutor,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome<EmbeddingModel>> {
    let mut rng = seeded(derive_seed(cfg.seed, &[INIT_STREAM]));
    let init = init_model(vocab.len(), cfg, spec, &mut rng)?;
    let mut engine = Engine::new(corpus, vocab, cfg, spec, vec![init.rho], init.alpha, None)?;
    let epochs = engine.run(executor, observer)?;
    let Engine {
        mut rho,
        alpha,
        step,
        ..
    } = engine;
    Ok(TrainOutcome {
        model: EmbeddingModel::new(rho.remove(0), alpha)?,
        epochs,
        steps: step,
    })
}

/// Dynamic MAP fit with one embedding matrix per slice. Every slice starts
/// from the same initialization.
pub fn train_dynamic(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    spec: &AnchorSpec,
) -> Result<TrainOutcome<DynamicModel>> {
    train_dynamic_with(corpus, vocab, cfg, spec, &SerialExecutor, &mut ())
}

pub fn train_dynamic_with(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    spec: &AnchorSpec,
    executor: &dyn BatchExecutor,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome<DynamicModel>> {
    if corpus.num_slices() < 2 {
        return Err(Error::TooFewSlices(corpus.num_slices()));
    }
    let mut rng = seeded(derive_seed(cfg.seed, &[INIT_STREAM]));
    let init = init_model(vocab.len(), cfg, spec, &mut rng)?;
    let rho = vec![init.rho; corpus.num_slices()];
    let sigma_d = cfg.effective_sigma_d(spec.params().sigma);
    let mut engine = Engine::new(corpus, vocab, cfg, spec, rho, init.alpha, Some(sigma_d))?;
    let epochs = engine.run(executor, observer)?;
    let Engine {
        rho, alpha, step, ..
    } = engine;
    Ok(TrainOutcome {
        model: DynamicModel::new(rho, alpha)?,
        epochs,
        steps: step,
    })
}

/// Adam ascent on the log prior alone, with no likelihood term. Each step
/// applies the full prior gradient.
pub fn prior_ascent(
    model: &mut EmbeddingModel,
    spec: &AnchorSpec,
    cfg: &TrainConfig,
    steps: u64,
) -> Result<()> {
    let (v, k) = (model.vocab_size(), model.dims());
    check_spec(v, cfg, spec)?;
    let mut adam_rho = SparseAdam::new(v, k, cfg.adam);
    let mut adam_alpha = SparseAdam::new(v, k, cfg.adam);
    let mut g = Matrix::zeros(v, k);
    for _ in 0..steps {
        for (theta, adam) in [
            (&mut model.rho, &mut adam_rho),
            (&mut model.alpha, &mut adam_alpha),
        ] {
            g.fill(0.0);
            add_grad_log_prior(theta, spec, RowScope::All, 1.0, &mut g)?;
            adam.step_dense(theta, &g);
            project_support(theta, spec, cfg.support_eps);
        }
    }
    Ok(())
}

/// Full log prior of a (possibly dynamic) parameter set.
pub fn total_log_prior(
    rho: &[Matrix],
    alpha: &Matrix,
    spec: &AnchorSpec,
    sigma_d: Option<f64>,
) -> Result<f64> {
    let mut total = log_prior(&rho[0], spec)? + log_prior(alpha, spec)?;
    for r in &rho[1..] {
        total += log_prior_scoped(r, spec, RowScope::Informative)?;
    }
    if let Some(sd) = sigma_d {
        total += random_walk_log_prior(rho, sd);
    }
    Ok(total)
}

/// Adds `scale * grad total_log_prior` into the gradient buffers.
pub fn add_total_prior_grad(
    rho: &[Matrix],
    alpha: &Matrix,
    spec: &AnchorSpec,
    sigma_d: Option<f64>,
    scale: f64,
    grad_rho: &mut [Matrix],
    grad_alpha: &mut Matrix,
) -> Result<()> {
    for (t, (r, g)) in rho.iter().zip(grad_rho.iter_mut()).enumerate() {
        let scope = if t == 0 {
            RowScope::All
        } else {
            RowScope::Informative
        };
        add_grad_log_prior(r, spec, scope, scale, g)?;
    }
    add_grad_log_prior(alpha, spec, RowScope::All, scale, grad_alpha)?;
    if let Some(sd) = sigma_d {
        add_random_walk_grad(rho, sd, scale, grad_rho);
    }
    Ok(())
}

const INIT_STREAM: u64 = 0x1a17;
const SHUFFLE_STREAM: u64 = 0x5f1e;
const BATCH_STREAM: u64 = 0xba7c;

struct Engine<'a> {
    corpus: &'a Corpus,
    cfg: &'a TrainConfig,
    spec: &'a AnchorSpec,
    sampler: NegativeSampler,
    sigma_d: Option<f64>,
    total_positives: usize,
    rho: Vec<Matrix>,
    alpha: Matrix,
    adam_rho: Vec<SparseAdam>,
    adam_alpha: SparseAdam,
    grad_rho: Vec<Matrix>,
    grad_alpha: Matrix,
    step: u64,
}

impl<'a> Engine<'a> {
    fn new(
        corpus: &'a Corpus,
        vocab: &Vocabulary,
        cfg: &'a TrainConfig,
        spec: &'a AnchorSpec,
        rho: Vec<Matrix>,
        alpha: Matrix,
        sigma_d: Option<f64>,
    ) -> Result<Self> {
        check_spec(vocab.len(), cfg, spec)?;
        let total_positives: usize = corpus
            .slices()
            .iter()
            .map(|s| count_windows(s.tokens.len(), cfg.window))
            .sum();
        if total_positives == 0 {
            return Err(Error::EmptyCorpus);
        }
        let (v, k) = (vocab.len(), cfg.dims);
        let sampler = NegativeSampler::new(vocab.counts(), cfg.neg_power)?;
        let t = rho.len();
        Ok(Engine {
            corpus,
            cfg,
            spec,
            sampler,
            sigma_d,
            total_positives,
            adam_rho: vec![SparseAdam::new(v, k, cfg.adam); t],
            adam_alpha: SparseAdam::new(v, k, cfg.adam),
            grad_rho: vec![Matrix::zeros(v, k); t],
            grad_alpha: Matrix::zeros(v, k),
            rho,
            alpha,
            step: 0,
        })
    }

    /// Batches in canonical order: slices in order, positions ascending.
    fn jobs(&self, epoch: usize) -> Vec<BatchJob> {
        let mut jobs = Vec::new();
        for (t, s) in self.corpus.slices().iter().enumerate() {
            if count_windows(s.tokens.len(), self.cfg.window) == 0 {
                continue;
            }
            let mut start = 0;
            while start < s.tokens.len() {
                let end = (start + self.cfg.batch_size).min(s.tokens.len());
                let seed = derive_seed(
                    self.cfg.seed,
                    &[BATCH_STREAM, epoch as u64, jobs.len() as u64],
                );
                jobs.push(BatchJob {
                    slice: t,
                    start,
                    end,
                    seed,
                });
                start = end;
            }
        }
        jobs
    }

    fn run(
        &mut self,
        executor: &dyn BatchExecutor,
        observer: &mut dyn TrainObserver,
    ) -> Result<Vec<EpochStats>> {
        let mut history = Vec::with_capacity(self.cfg.epochs);
        let round = executor.round_size().max(1);
        for epoch in 0..self.cfg.epochs {
            let mut jobs = self.jobs(epoch);
            let mut rng = seeded(derive_seed(self.cfg.seed, &[SHUFFLE_STREAM, epoch as u64]));
            jobs.shuffle(&mut rng);

            let mut log_likelihood = 0.0;
            let mut prior_weight = 0.0;
            for chunk in jobs.chunks(round) {
                let grads = {
                    let ctx = EvalContext {
                        slices: self.corpus.slices(),
                        rho: &self.rho,
                        alpha: &self.alpha,
                        sampler: &self.sampler,
                        window: self.cfg.window,
                        neg_count: self.cfg.neg_count,
                    };
                    executor.evaluate(chunk, &ctx)
                };
                for (job, grad) in chunk.iter().zip(&grads) {
                    log_likelihood += grad.log_likelihood;
                    prior_weight += self.apply(job, grad)?;
                    observer.on_step(self.step, &self.rho, &self.alpha);
                }
            }
            self.check_finite()?;
            let log_prior = total_log_prior(&self.rho, &self.alpha, self.spec, self.sigma_d)?;
            let stats = EpochStats {
                epoch: epoch + 1,
                objective: log_likelihood + log_prior,
                log_prior,
                log_likelihood,
                prior_weight,
                steps: self.step,
            };
            observer.on_epoch(&stats);
            history.push(stats);
        }
        Ok(history)
    }

    /// One Adam step on `batch log-likelihood + w * log prior`. Returns `w`.
    fn apply(&mut self, job: &BatchJob, grad: &BatchGrad) -> Result<f64> {
        let w = grad.positives as f64 / self.total_positives as f64;
        self.grad_rho.iter_mut().for_each(|g| g.fill(0.0));
        self.grad_alpha.fill(0.0);
        grad.rho.add_to(&mut self.grad_rho[job.slice], 1.0);
        grad.alpha.add_to(&mut self.grad_alpha, 1.0);
        add_total_prior_grad(
            &self.rho,
            &self.alpha,
            self.spec,
            self.sigma_d,
            w,
            &mut self.grad_rho,
            &mut self.grad_alpha,
        )?;
        for ((theta, adam), g) in self
            .rho
            .iter_mut()
            .zip(self.adam_rho.iter_mut())
            .zip(&self.grad_rho)
        {
            adam.step_dense(theta, g);
            project_support(theta, self.spec, self.cfg.support_eps);
        }
        self.adam_alpha
            .step_dense(&mut self.alpha, &self.grad_alpha);
        project_support(&mut self.alpha, self.spec, self.cfg.support_eps);
        self.step += 1;
        if self.step % self.cfg.divergence_check_every == 0 {
            self.check_finite()?;
        }
        Ok(w)
    }

    fn check_finite(&self) -> Result<()> {
        for (t, r) in self.rho.iter().enumerate() {
            if let Some(row) = r.first_non_finite_row() {
                let matrix = if self.rho.len() == 1 {
                    String::from("rho")
                } else {
                    format!("rho[{t}]")
                };
                return Err(Error::Divergence {
                    step: self.step,
                    matrix,
                    row,
                });
            }
        }
        if let Some(row) = self.alpha.first_non_finite_row() {
            return Err(Error::Divergence {
                step: self.step,
                matrix: String::from("alpha"),
                row,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::PriorParams;
    use crate::synth::{generate, generate_sliced, PlantedCorpus, PlantedSpec, SlicedSpec};
    use alloc::collections::BTreeSet;

    fn planted(seed: u64) -> PlantedCorpus {
        generate(&PlantedSpec {
            vocab_size: 60,
            n_signal: 20,
            n_docs: 40,
            doc_len: 50,
            mix: 0.7,
            seed,
            zipf: None,
        })
        .unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            dims: 4,
            window: 4,
            neg_count: 3,
            epochs: 2,
            batch_size: 300,
            ..TrainConfig::default()
        }
    }

    /// Anchors: planted indices 0..3 positive, 10..13 negative.
    fn anchors(p: &PlantedCorpus, params: PriorParams, dims: usize) -> AnchorSpec {
        let ids =
            |r: core::ops::Range<usize>| -> BTreeSet<u32> { r.map(|i| p.id(i).unwrap()).collect() };
        AnchorSpec::new(
            p.vocab.len(),
            dims,
            ids(0..3),
            ids(10..13),
            BTreeSet::new(),
            params,
        )
        .unwrap()
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let p = planted(1);
        let cfg = TrainConfig {
            epochs: 0,
            ..small_cfg()
        };
        let spec = anchors(&p, PriorParams::standard_basis_weak(), cfg.dims);
        let out = train(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        let mut rng = seeded(derive_seed(cfg.seed, &[INIT_STREAM]));
        let init = init_model(p.vocab.len(), &cfg, &spec, &mut rng).unwrap();
        assert_eq!(out.model, init);
        assert_eq!(out.steps, 0);
        assert!(out.epochs.is_empty());
    }

    #[test]
    fn init_places_anchors_at_modes() {
        let p = planted(1);
        let cfg = small_cfg();
        let k = cfg.dims - 1;
        let sb = anchors(&p, PriorParams::standard_basis_weak(), cfg.dims);
        let m = init_model(p.vocab.len(), &cfg, &sb, &mut seeded(3)).unwrap();
        let neg = p.id(10).unwrap() as usize;
        let pos = p.id(0).unwrap() as usize;
        assert_eq!(m.rho.get(neg, k), -1.0);
        assert_eq!(m.alpha.get(pos, k), 1.0);

        let tr = anchors(&p, PriorParams::truncated(), cfg.dims);
        let m = init_model(p.vocab.len(), &cfg, &tr, &mut seeded(3)).unwrap();
        assert_eq!(m.rho.get(pos, k), 0.1);
        assert_eq!(m.rho.get(neg, k), -0.1);
    }

    #[test]
    fn unanchored_init_has_init_scale_spread() {
        let cfg = TrainConfig {
            dims: 50,
            ..small_cfg()
        };
        let spec = AnchorSpec::unanchored(400, 50, 1.0).unwrap();
        let m = init_model(400, &cfg, &spec, &mut seeded(5)).unwrap();
        let xs = m.rho.as_slice();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.005, "{mean}");
        assert!((var - 0.01).abs() < 0.0005, "{var}");
    }

    #[test]
    fn init_rejects_tiny_vocabulary() {
        let cfg = small_cfg();
        let spec = AnchorSpec::unanchored(1, 4, 1.0).unwrap();
        assert_eq!(
            init_model(1, &cfg, &spec, &mut seeded(0)),
            Err(Error::VocabularyTooSmall(1))
        );
    }

    #[test]
    fn prior_weight_sums_to_one_per_epoch() {
        let p = planted(2);
        let cfg = TrainConfig {
            batch_size: 170,
            ..small_cfg()
        };
        let spec = anchors(&p, PriorParams::standard_basis_weak(), cfg.dims);
        let out = train(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        assert_eq!(out.epochs.len(), 2);
        for e in &out.epochs {
            assert!((e.prior_weight - 1.0).abs() < 1e-12, "{}", e.prior_weight);
            assert!(e.objective.is_finite());
        }
        assert_eq!(out.steps, 2 * 2000u64.div_ceil(170));
    }

    struct SupportCheck {
        pos: Vec<usize>,
        neg: Vec<usize>,
        k: usize,
        eps: f64,
        checks: u64,
        violations: u64,
    }

    impl TrainObserver for SupportCheck {
        fn on_step(&mut self, _step: u64, rho: &[Matrix], alpha: &Matrix) {
            for m in rho.iter().chain(core::iter::once(alpha)) {
                for &v in &self.pos {
                    self.violations += u64::from(m.get(v, self.k) < self.eps);
                }
                for &v in &self.neg {
                    self.violations += u64::from(m.get(v, self.k) > -self.eps);
                }
            }
            self.checks += 1;
        }
    }

    #[test]
    fn truncated_support_holds_after_every_step() {
        let p = planted(3);
        let cfg = TrainConfig {
            adam: AdamConfig {
                learning_rate: 0.2,
                ..AdamConfig::default()
            },
            ..small_cfg()
        };
        let spec = anchors(&p, PriorParams::truncated(), cfg.dims);
        let mut obs = SupportCheck {
            pos: spec.positive().iter().map(|&v| v as usize).collect(),
            neg: spec.negative().iter().map(|&v| v as usize).collect(),
            k: cfg.dims - 1,
            eps: cfg.support_eps,
            checks: 0,
            violations: 0,
        };
        let out = train_with(&p.corpus, &p.vocab, &cfg, &spec, &SerialExecutor, &mut obs).unwrap();
        assert_eq!(obs.checks, out.steps);
        assert_eq!(obs.violations, 0);
    }

    #[test]
    fn training_is_deterministic() {
        let p = planted(4);
        let cfg = small_cfg();
        let spec = anchors(&p, PriorParams::standard_basis_weak(), cfg.dims);
        let a = train(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        let b = train(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        assert_eq!(a, b);
        let other = TrainConfig {
            seed: 1,
            ..cfg.clone()
        };
        let c = train(&p.corpus, &p.vocab, &other, &spec).unwrap();
        assert_ne!(a.model, c.model);
    }

    /// Round size > 1 evaluates several batches against one snapshot; the
    /// result must not depend on how those batches are computed.
    struct Rounds(usize);

    impl BatchExecutor for Rounds {
        fn round_size(&self) -> usize {
            self.0
        }
        fn evaluate(&self, jobs: &[BatchJob], ctx: &EvalContext<'_>) -> Vec<BatchGrad> {
            jobs.iter()
                .rev()
                .map(|j| evaluate_job(j, ctx))
                .rev()
                .collect()
        }
    }

    #[test]
    fn snapshot_rounds_are_reproducible() {
        let p = planted(4);
        let cfg = small_cfg();
        let spec = anchors(&p, PriorParams::standard_basis_weak(), cfg.dims);
        let run = || train_with(&p.corpus, &p.vocab, &cfg, &spec, &Rounds(3), &mut ()).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        let serial = train(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        assert_eq!(a.steps, serial.steps);
        let one = train_with(&p.corpus, &p.vocab, &cfg, &spec, &Rounds(1), &mut ()).unwrap();
        assert_eq!(one, serial);
    }

    #[test]
    fn strict_prior_pins_anchor_rows() {
        let p = planted(5);
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: 100,
            ..small_cfg()
        };
        let params = PriorParams {
            gamma: 1e-12,
            omega: 1e-12,
            ..PriorParams::standard_basis_strict()
        };
        let spec = anchors(&p, params, cfg.dims);
        let out = train(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        let k = cfg.dims - 1;
        for (set, sign) in [(spec.positive(), 1.0), (spec.negative(), -1.0)] {
            for &v in set {
                for m in [&out.model.rho, &out.model.alpha] {
                    for c in 0..cfg.dims {
                        let target = if c == k { sign } else { 0.0 };
                        let d = (m.get(v as usize, c) - target).abs();
                        assert!(d < 1e-3, "row {v} dim {c} off by {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn pure_prior_ascent_reaches_modes() {
        let cfg = TrainConfig {
            dims: 5,
            ..small_cfg()
        };
        let params = PriorParams {
            gamma: 1e-12,
            omega: 1e-12,
            ..PriorParams::standard_basis_strict()
        };
        let spec = AnchorSpec::new(
            30,
            5,
            [0u32, 1, 2].into_iter().collect(),
            [3u32, 4].into_iter().collect(),
            BTreeSet::new(),
            params,
        )
        .unwrap();
        let mut rng = seeded(6);
        let mut model = EmbeddingModel::new(
            Matrix::from_fn(30, 5, |_, _| standard_normal(&mut rng)),
            Matrix::from_fn(30, 5, |_, _| standard_normal(&mut rng)),
        )
        .unwrap();
        prior_ascent(&mut model, &spec, &cfg, 1500).unwrap();
        for v in 0..5usize {
            let sign = if v < 3 { 1.0 } else { -1.0 };
            for m in [&model.rho, &model.alpha] {
                for c in 0..5 {
                    let target = if c == 4 { sign } else { 0.0 };
                    assert!((m.get(v, c) - target).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let p = planted(7);
        let cfg = TrainConfig {
            adam: AdamConfig {
                learning_rate: 1e300,
                ..AdamConfig::default()
            },
            divergence_check_every: 1,
            ..small_cfg()
        };
        let spec = AnchorSpec::unanchored(p.vocab.len(), cfg.dims, 1.0).unwrap();
        match train(&p.corpus, &p.vocab, &cfg, &spec) {
            Err(Error::Divergence { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let p = planted(1);
        let spec = AnchorSpec::unanchored(p.vocab.len(), 4, 1.0).unwrap();
        for cfg in [
            TrainConfig {
                window: 3,
                ..small_cfg()
            },
            TrainConfig {
                batch_size: 0,
                ..small_cfg()
            },
            TrainConfig {
                adam: AdamConfig {
                    beta1: 1.0,
                    ..AdamConfig::default()
                },
                ..small_cfg()
            },
        ] {
            assert!(matches!(
                train(&p.corpus, &p.vocab, &cfg, &spec),
                Err(Error::InvalidConfig(_))
            ));
        }
        let wrong = AnchorSpec::unanchored(p.vocab.len(), 5, 1.0).unwrap();
        assert!(matches!(
            train(&p.corpus, &p.vocab, &small_cfg(), &wrong),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    fn sliced(repeat: bool) -> PlantedCorpus {
        generate_sliced(&SlicedSpec {
            base: PlantedSpec {
                vocab_size: 60,
                n_signal: 20,
                n_docs: 30,
                doc_len: 50,
                mix: 0.7,
                seed: 8,
                zipf: None,
            },
            slices: 3,
            flips: Vec::new(),
            repeat_data: repeat,
        })
        .unwrap()
    }

    #[test]
    fn dynamic_zero_epochs_all_slices_equal_init() {
        let p = sliced(false);
        let cfg = TrainConfig {
            epochs: 0,
            ..small_cfg()
        };
        let spec = anchors(&p, PriorParams::truncated(), cfg.dims);
        let out = train_dynamic(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        let mut rng = seeded(derive_seed(cfg.seed, &[INIT_STREAM]));
        let init = init_model(p.vocab.len(), &cfg, &spec, &mut rng).unwrap();
        assert_eq!(out.model.num_slices(), 3);
        for t in 0..3 {
            assert_eq!(out.model.rho[t], init.rho);
        }
        assert_eq!(out.model.alpha, init.alpha);
    }

    #[test]
    fn dynamic_needs_two_slices() {
        let p = planted(1);
        let spec = AnchorSpec::unanchored(p.vocab.len(), 4, 1.0).unwrap();
        assert_eq!(
            train_dynamic(&p.corpus, &p.vocab, &small_cfg(), &spec),
            Err(Error::TooFewSlices(1))
        );
    }

    #[test]
    fn roughness_shrinks_with_sigma_d() {
        let p = sliced(false);
        let spec = anchors(&p, PriorParams::standard_basis_weak(), 4);
        let rough: Vec<f64> = [0.5, 0.05, 0.005]
            .iter()
            .map(|&sd| {
                let cfg = TrainConfig {
                    sigma_d: Some(sd),
                    ..small_cfg()
                };
                train_dynamic(&p.corpus, &p.vocab, &cfg, &spec)
                    .unwrap()
                    .model
                    .roughness()
            })
            .collect();
        assert!(rough[0] >= rough[1] && rough[1] >= rough[2], "{rough:?}");
    }

    #[test]
    fn identical_slices_with_tight_walk_stay_together() {
        let p = sliced(true);
        let cfg = TrainConfig {
            sigma_d: Some(1e-6),
            ..small_cfg()
        };
        let spec = anchors(&p, PriorParams::standard_basis_weak(), cfg.dims);
        let out = train_dynamic(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        let d = out.model.rho[1].squared_distance(&out.model.rho[0]);
        assert!(d < 1e-3, "{d}");
    }

    #[test]
    fn dynamic_objective_includes_random_walk() {
        let p = sliced(false);
        let cfg = TrainConfig {
            epochs: 1,
            ..small_cfg()
        };
        let spec = anchors(&p, PriorParams::standard_basis_weak(), cfg.dims);
        let out = train_dynamic(&p.corpus, &p.vocab, &cfg, &spec).unwrap();
        let m = &out.model;
        let expected = total_log_prior(&m.rho, &m.alpha, &spec, Some(0.01)).unwrap();
        let e = out.epochs[0];
        assert!((e.log_prior - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        assert!((e.prior_weight - 1.0).abs() < 1e-12);
    }
}
