use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::linalg::gemm;
use super::param::{Param, Parameterized};

/// One row per canonical category.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub rows: Param,
}

impl EmbeddingTable {
    /// Trainable table with rows drawn from N(0, 1).
    pub fn learned<R: Rng + ?Sized>(name: &str, num_categories: usize, dim: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, 1.0).expect("valid std");
        let values = (0..num_categories * dim).map(|_| normal.sample(rng)).collect();
        Self {
            rows: Param::new(name, vec![num_categories, dim], values, true),
        }
    }

    /// Non-trainable table from precomputed vectors.
    pub fn frozen(name: &str, vectors: &[Vec<f64>], dim: usize) -> Self {
        let values = vectors.iter().flat_map(|v| v.iter().copied()).collect();
        Self {
            rows: Param::new(name, vec![vectors.len(), dim], values, false),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.shape[0]
    }

    pub fn dim(&self) -> usize {
        self.rows.shape[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.rows.value[i * d..(i + 1) * d]
    }

    pub fn is_trainable(&self) -> bool {
        self.rows.trainable
    }
}

/// A bias-free linear map applied to a category table row, i.e. the
/// category block of a layer whose input is `[features; E[c]]`.
///
/// Projections of every row are cached once per optimizer step and row
/// gradients are accumulated per category, so the cost per sample is
/// independent of the embedding width.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryBranch {
    pub table: EmbeddingTable,
    pub weight: Param,
}

impl CategoryBranch {
    pub fn new<R: Rng + ?Sized>(name: &str, table: EmbeddingTable, out_dim: usize, fan_in: usize, rng: &mut R) -> Self {
        let dim = table.dim();
        let limit = super::affine::glorot_limit(fan_in, out_dim);
        let values = (0..out_dim * dim).map(|_| rng.gen_range(-limit..limit)).collect();
        Self {
            table,
            weight: Param::new(format!("{name}.weight"), vec![out_dim, dim], values, true),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape[0]
    }

    /// `num_rows x out_dim` matrix of `W E[c]` for every category.
    pub fn project_all(&self) -> Vec<f64> {
        let (rows, dim, out) = (self.table.num_rows(), self.table.dim(), self.out_dim());
        let mut proj = vec![0.0; rows * out];
        gemm(rows, dim, out, &self.table.rows.value, false, &self.weight.value, true, 0.0, &mut proj);
        proj
    }

    /// Applies per-category upstream gradients (`num_rows x out_dim`):
    /// `dW += Gᵀ E` and, for trainable tables, `dE += G W`.
    pub fn accumulate(&mut self, row_grads: &[f64]) {
        let (rows, dim, out) = (self.table.num_rows(), self.table.dim(), self.out_dim());
        gemm(out, rows, dim, row_grads, true, &self.table.rows.value, false, 1.0, &mut self.weight.grad);
        if self.table.is_trainable() {
            gemm(rows, out, dim, row_grads, false, &self.weight.value, false, 1.0, &mut self.table.rows.grad);
        }
    }
}

impl Parameterized for CategoryBranch {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.table.rows]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.table.rows]
    }
}
