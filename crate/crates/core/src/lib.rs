//! Bernoulli word embeddings with an interpretable dimension.
//!
//! One designated coordinate (the last embedding dimension) is tied to a
//! concept such as gender or sentiment by placing informative Gaussian
//! priors on a small set of anchor words. Parameters are fit by MAP
//! estimation with negative sampling and a sparse Adam optimizer, for both
//! static models and dynamic models whose embedding vectors follow a
//! Gaussian random walk over time slices.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, corpus loading
//! from disk and the command-line tool live in the `anchorvec` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adam;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod math;
pub mod matrix;
pub mod model;
pub mod porter;
pub mod priors;
pub mod rng;
pub mod synth;
pub mod text;
pub mod trainer;
pub mod vocab;

pub use crate::adam::{AdamConfig, SparseAdam};
pub use crate::corpus::{assemble_corpus, removal_probability, subsample, Corpus, Slice};
pub use crate::error::{Error, Result};
pub use crate::eval::{
    binomial_ci, holdout_accuracy, resolve_holdout, resolve_pairs, sota_accuracy, sota_axis,
    trajectory, EvalReport, HoldoutSet, ResolvedHoldout, Sign, WordOutcome,
};
pub use crate::lexicon::{Lexicon, WordList};
pub use crate::matrix::Matrix;
pub use crate::model::{
    batch_objective_and_grad, context_sum, eta, windows, BatchGrad, ContextWindow, DynamicModel,
    EmbeddingModel, NegativeSampler, SparseRows,
};
pub use crate::priors::{
    grad_log_prior, log_prior, project_support, resolve_anchors, AnchorRequest, AnchorResolution,
    AnchorSpec, PriorKind, PriorParams,
};
pub use crate::synth::{
    generate, generate_sliced, planted_word, Flip, PlantedCorpus, PlantedSpec, Polarity, SlicedSpec,
};
pub use crate::text::{preprocess_bytes, preprocess_text, PreprocessConfig};
pub use crate::trainer::{
    evaluate_job, init_model, prior_ascent, train, train_dynamic, train_dynamic_with, train_with,
    BatchExecutor, BatchJob, EpochStats, EvalContext, SerialExecutor, TrainConfig, TrainObserver,
    TrainOutcome,
};
pub use crate::vocab::{build_vocabulary, Vocabulary};

/// Index of the interpretable dimension for embeddings of size `dims`.
#[inline]
pub fn interpretable_dim(dims: usize) -> usize {
    dims - 1
}
