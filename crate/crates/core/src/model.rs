//! Bernoulli embedding likelihood with negative sampling.
//!
//! For the token at position `i` with type `v` and context ids `c_i`, the
//! context vector is `s_i = sum_{u in c_i} alpha_u` and the observed entry
//! has probability `sigmoid(rho_v . s_i)`. Each sampled negative type `n`
//! contributes `ln(1 - sigmoid(rho_n . s_i))`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{axpy, dot, log_sigmoid, sigmoid};
use crate::matrix::Matrix;

/// Embedding (`rho`) and context (`alpha`) vectors, one row per word type.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub rho: Matrix,
    pub alpha: Matrix,
}

impl EmbeddingModel {
    pub fn new(rho: Matrix, alpha: Matrix) -> Result<Self> {
        alpha.check_shape(rho.rows(), rho.cols())?;
        Ok(EmbeddingModel { rho, alpha })
    }

    pub fn vocab_size(&self) -> usize {
        self.rho.rows()
    }

    pub fn dims(&self) -> usize {
        self.rho.cols()
    }
}

/// One `rho` matrix per time slice with a shared `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicModel {
    pub rho: Vec<Matrix>,
    pub alpha: Matrix,
}

impl DynamicModel {
    pub fn new(rho: Vec<Matrix>, alpha: Matrix) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::TooFewSlices(0));
        }
        for r in &rho {
            r.check_shape(alpha.rows(), alpha.cols())?;
        }
        Ok(DynamicModel { rho, alpha })
    }

    pub fn num_slices(&self) -> usize {
        self.rho.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.alpha.rows()
    }

    pub fn dims(&self) -> usize {
        self.alpha.cols()
    }

    /// Static view of slice `t`.
    pub fn slice(&self, t: usize) -> EmbeddingModel {
        EmbeddingModel {
            rho: self.rho[t].clone(),
            alpha: self.alpha.clone(),
        }
    }

    /// `sum_t ||rho[t] - rho[t-1]||^2`
    pub fn roughness(&self) -> f64 {
        self.rho
            .windows(2)
            .map(|w| w[1].squared_distance(&w[0]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow {
    /// Position of the center token in its slice.
    pub center: usize,
    pub center_id: u32,
    pub context: Vec<u32>,
}

/// Context windows over one slice: up to `window_size / 2` tokens on each
/// side, truncated at the slice boundaries. Positions without any context
/// are skipped.
pub fn windows(tokens: &[u32], window_size: usize) -> impl Iterator<Item = ContextWindow> + '_ {
    let half = window_size / 2;
    (0..tokens.len()).filter_map(move |i| window_at(tokens, i, half))
}

pub(crate) fn window_at(tokens: &[u32], i: usize, half: usize) -> Option<ContextWindow> {
    let lo = i.saturating_sub(half);
    let hi = (i + half + 1).min(tokens.len());
    if hi - lo <= 1 {
        return None;
    }
    let mut context = Vec::with_capacity(hi - lo - 1);
    context.extend_from_slice(&tokens[lo..i]);
    context.extend_from_slice(&tokens[i + 1..hi]);
    Some(ContextWindow {
        center: i,
        center_id: tokens[i],
        context,
    })
}

/// Number of positions in a slice of `len` tokens that have a context.
pub fn count_windows(len: usize, window_size: usize) -> usize {
    if len >= 2 && window_size >= 2 {
        len
    } else {
        0
    }
}

/// `sum_{u in context} alpha_u`
pub fn context_sum(window: &ContextWindow, alpha: &Matrix) -> Result<Vec<f64>> {
    if window.context.is_empty() {
        return Err(Error::EmptyContext);
    }
    let mut s = vec![0.0; alpha.cols()];
    for &u in &window.context {
        axpy(1.0, alpha.row(u as usize), &mut s);
    }
    Ok(s)
}

/// Bernoulli mean `sigmoid(rho_v . s)`.
pub fn eta(rho_v: &[f64], s: &[f64]) -> f64 {
    sigmoid(dot(rho_v, s))
}

/// Draws word types with probability proportional to `count^power`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: impl IntoIterator<Item = u64>, power: f64) -> Result<Self> {
        let mut total = 0.0;
        let cumulative: Vec<f64> = counts
            .into_iter()
            .map(|c| {
                total += libm::pow(c as f64, power);
                total
            })
            .collect();
        if cumulative.len() < 2 {
            return Err(Error::VocabularyTooSmall(cumulative.len()));
        }
        Ok(NegativeSampler { cumulative })
    }

    pub fn vocab_size(&self) -> usize {
        self.cumulative.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }

    /// `count` i.i.d. draws, redrawing any that hit `exclude`.
    pub fn draw_excluding<R: Rng + ?Sized>(
        &self,
        count: usize,
        exclude: Option<u32>,
        rng: &mut R,
    ) -> Vec<u32> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let id = self.draw(rng);
            if Some(id) != exclude {
                out.push(id);
            }
        }
        out
    }
}

/// Convenience wrapper building a sampler from vocabulary counts.
pub fn draw_negatives<R: Rng + ?Sized>(
    counts: impl IntoIterator<Item = u64>,
    count: usize,
    exclude: Option<u32>,
    power: f64,
    rng: &mut R,
) -> Result<Vec<u32>> {
    Ok(NegativeSampler::new(counts, power)?.draw_excluding(count, exclude, rng))
}

/// Gradient rows keyed by word id. Duplicate contributions accumulate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    dims: usize,
    rows: BTreeMap<u32, Vec<f64>>,
}

impl SparseRows {
    pub fn new(dims: usize) -> Self {
        SparseRows {
            dims,
            rows: BTreeMap::new(),
        }
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        let dims = self.dims;
        self.rows.entry(id).or_insert_with(|| vec![0.0; dims])
    }

    pub fn get(&self, id: u32) -> Option<&[f64]> {
        self.rows.get(&id).map(Vec::as_slice)
    }

    /// Rows in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &[f64])> {
        self.rows.iter().map(|(&id, r)| (id, r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `dense += scale * self`
    pub fn add_to(&self, dense: &mut Matrix, scale: f64) {
        for (id, r) in self.iter() {
            axpy(scale, r, dense.row_mut(id as usize));
        }
    }

    pub fn to_dense(&self, rows: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, self.dims);
        self.add_to(&mut m, 1.0);
        m
    }
}

/// Likelihood value and gradient for one minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGrad {
    pub log_likelihood: f64,
    /// Number of observed (positive) tokens in the batch.
    pub positives: usize,
    pub rho: SparseRows,
    pub alpha: SparseRows,
}

/// Draws `neg_count` negatives per window, excluding the center type.
pub fn draw_batch_negatives<R: Rng + ?Sized>(
    batch: &[ContextWindow],
    sampler: &NegativeSampler,
    neg_count: usize,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    batch
        .iter()
        .map(|w| sampler.draw_excluding(neg_count, Some(w.center_id), rng))
        .collect()
}

/// Batch log-likelihood and its gradient with negatives drawn from `rng`.
pub fn batch_objective_and_grad<R: Rng + ?Sized>(
    batch: &[ContextWindow],
    rho: &Matrix,
    alpha: &Matrix,
    sampler: &NegativeSampler,
    neg_count: usize,
    rng: &mut R,
) -> BatchGrad {
    let negatives = draw_batch_negatives(batch, sampler, neg_count, rng);
    objective_and_grad_frozen(batch, rho, alpha, &negatives)
}

/// Batch log-likelihood and exact gradient for fixed negative draws:
///
/// `sum_i [ ln sigmoid(rho_v . s_i) + sum_n ln sigmoid(-rho_n . s_i) ]`
///
/// Windows with an empty context are skipped.
pub fn objective_and_grad_frozen(
    batch: &[ContextWindow],
    rho: &Matrix,
    alpha: &Matrix,
    negatives: &[Vec<u32>],
) -> BatchGrad {
    debug_assert_eq!(batch.len(), negatives.len());
    let k = rho.cols();
    let mut out = BatchGrad {
        log_likelihood: 0.0,
        positives: 0,
        rho: SparseRows::new(k),
        alpha: SparseRows::new(k),
    };
    let mut s = vec![0.0; k];
    let mut d_context = vec![0.0; k];
    for (w, negs) in batch.iter().zip(negatives) {
        if w.context.is_empty() {
            continue;
        }
        s.iter_mut().for_each(|x| *x = 0.0);
        for &u in &w.context {
            axpy(1.0, alpha.row(u as usize), &mut s);
        }
        d_context.iter_mut().for_each(|x| *x = 0.0);

        let rho_v = rho.row(w.center_id as usize);
        let x = dot(rho_v, &s);
        let resid = 1.0 - sigmoid(x);
        out.log_likelihood += log_sigmoid(x);
        axpy(resid, &s, out.rho.row_mut(w.center_id));
        axpy(resid, rho_v, &mut d_context);

        for &n in negs {
            let rho_n = rho.row(n as usize);
            let xn = dot(rho_n, &s);
            let eta_n = sigmoid(xn);
            out.log_likelihood += log_sigmoid(-xn);
            axpy(-eta_n, &s, out.rho.row_mut(n));
            axpy(-eta_n, rho_n, &mut d_context);
        }
        for &u in &w.context {
            axpy(1.0, &d_context, out.alpha.row_mut(u));
        }
        out.positives += 1;
    }
    out
}
