//! Multi-threaded batch evaluation.

use anchorvec_core::model::BatchGrad;
use anchorvec_core::trainer::{evaluate_job, BatchExecutor, BatchJob, EvalContext};
use rayon::prelude::*;

use crate::error::{AppError, AppResult};

/// Evaluates `threads` batches at a time on a dedicated thread pool. All
/// batches of a round see the same parameters; their gradients are applied
/// in batch order, so results depend on the thread count but not on
/// scheduling.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
    round: usize,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> AppResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AppError::Config(format!("cannot start {threads} threads: {e}")))?;
        Ok(RayonExecutor {
            pool,
            round: threads.max(1),
        })
    }
}

impl BatchExecutor for RayonExecutor {
    fn round_size(&self) -> usize {
        self.round
    }

    fn evaluate(&self, jobs: &[BatchJob], ctx: &EvalContext<'_>) -> Vec<BatchGrad> {
        self.pool
            .install(|| jobs.par_iter().map(|j| evaluate_job(j, ctx)).collect())
    }
}
