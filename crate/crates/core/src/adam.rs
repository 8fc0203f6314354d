//! Adam for gradient *ascent* with lazily updated rows.
//!
//! Each row keeps its own step counter, so rows that see a gradient rarely
//! still get the correct bias correction when they do.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::model::SparseRows;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdam {
    cfg: AdamConfig,
    first: Matrix,
    second: Matrix,
    steps: Vec<u64>,
}

impl SparseAdam {
    pub fn new(rows: usize, cols: usize, cfg: AdamConfig) -> Self {
        SparseAdam {
            cfg,
            first: Matrix::zeros(rows, cols),
            second: Matrix::zeros(rows, cols),
            steps: vec![0; rows],
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    pub fn row_steps(&self, row: usize) -> u64 {
        self.steps[row]
    }

    pub fn first_moment(&self) -> &Matrix {
        &self.first
    }

    pub fn second_moment(&self) -> &Matrix {
        &self.second
    }

    /// Updates one row. A gradient of all zeros leaves the row, its moments
    /// and its counter untouched.
    pub fn step_row(&mut self, params: &mut Matrix, row: usize, grad: &[f64]) {
        if grad.iter().all(|&g| g == 0.0) {
            return;
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.cfg;
        self.steps[row] += 1;
        let t = self.steps[row] as i32;
        let c1 = 1.0 - libm::pow(beta1, t as f64);
        let c2 = 1.0 - libm::pow(beta2, t as f64);
        let m = self.first.row_mut(row);
        for (mi, &g) in m.iter_mut().zip(grad) {
            *mi = beta1 * *mi + (1.0 - beta1) * g;
        }
        let v = self.second.row_mut(row);
        for (vi, &g) in v.iter_mut().zip(grad) {
            *vi = beta2 * *vi + (1.0 - beta2) * g * g;
        }
        let (m, v) = (self.first.row(row), self.second.row(row));
        for ((p, &mi), &vi) in params.row_mut(row).iter_mut().zip(m).zip(v) {
            let m_hat = mi / c1;
            let v_hat = vi / c2;
            *p += learning_rate * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }

    pub fn step_dense(&mut self, params: &mut Matrix, grad: &Matrix) {
        debug_assert!(params.same_shape(grad));
        for r in 0..grad.rows() {
            self.step_row(params, r, grad.row(r));
        }
    }

    pub fn step_sparse(&mut self, params: &mut Matrix, grad: &SparseRows) {
        for (id, g) in grad.iter() {
            self.step_row(params, id as usize, g);
        }
    }
}
