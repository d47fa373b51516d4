use rand::Rng;

use super::linalg::gemm;
use super::param::{Param, Parameterized};
use crate::error::{Error, Result};

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `y = W x + b`, applied row-wise to a `rows x in_dim` batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: Param,
    pub bias: Option<Param>,
    in_dim: usize,
    out_dim: usize,
}

impl Affine {
    pub fn zeros(name: &str, in_dim: usize, out_dim: usize, bias: bool) -> Self {
        Self {
            weight: Param::zeros(format!("{name}.weight"), vec![out_dim, in_dim], true),
            bias: bias.then(|| Param::zeros(format!("{name}.bias"), vec![out_dim], true)),
            in_dim,
            out_dim,
        }
    }

    /// Uniform `+-sqrt(6 / (fan_in + fan_out))` weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(name: &str, in_dim: usize, out_dim: usize, bias: bool, rng: &mut R) -> Self {
        Self::uniform(name, in_dim, out_dim, bias, glorot_limit(in_dim, out_dim), rng)
    }

    /// Uniform `+-limit` weights, zero bias.
    pub fn uniform<R: Rng + ?Sized>(
        name: &str,
        in_dim: usize,
        out_dim: usize,
        bias: bool,
        limit: f64,
        rng: &mut R,
    ) -> Self {
        let mut layer = Self::zeros(name, in_dim, out_dim, bias);
        for w in &mut layer.weight.value {
            *w = rng.gen_range(-limit..limit);
        }
        layer
    }

    pub fn from_parts(name: &str, in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Option<Vec<f64>>) -> Result<Self> {
        if weight.len() != in_dim * out_dim {
            return Err(Error::Shape(format!("{name}: weight has {} values, expected {out_dim}x{in_dim}", weight.len())));
        }
        if let Some(b) = &bias {
            if b.len() != out_dim {
                return Err(Error::Shape(format!("{name}: bias has {} values, expected {out_dim}", b.len())));
            }
        }
        Ok(Self {
            weight: Param::new(format!("{name}.weight"), vec![out_dim, in_dim], weight, true),
            bias: bias.map(|b| Param::new(format!("{name}.bias"), vec![out_dim], b, true)),
            in_dim,
            out_dim,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn check_rows(&self, x: &[f64], width: usize) -> Result<usize> {
        if width == 0 || !x.len().is_multiple_of(width) {
            return Err(Error::Shape(format!(
                "{}: input of length {} is not a multiple of {width}",
                self.weight.name,
                x.len()
            )));
        }
        Ok(x.len() / width)
    }

    /// Forward pass over `x.len() / in_dim` rows.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rows = self.check_rows(x, self.in_dim)?;
        let mut y = vec![0.0; rows * self.out_dim];
        if let Some(b) = &self.bias {
            for row in y.chunks_exact_mut(self.out_dim) {
                row.copy_from_slice(&b.value);
            }
        }
        gemm(rows, self.in_dim, self.out_dim, x, false, &self.weight.value, true, 1.0, &mut y);
        Ok(y)
    }

    /// Accumulates `dW += d_outᵀ x` and `db += Σ d_out`; returns `d_out W`
    /// when `need_input_grad`.
    pub fn backward(&mut self, x: &[f64], d_out: &[f64], need_input_grad: bool) -> Result<Option<Vec<f64>>> {
        let rows = self.check_rows(x, self.in_dim)?;
        if d_out.len() != rows * self.out_dim {
            return Err(Error::Shape(format!(
                "{}: upstream gradient has {} values, expected {rows}x{}",
                self.weight.name,
                d_out.len(),
                self.out_dim
            )));
        }
        gemm(self.out_dim, rows, self.in_dim, d_out, true, x, false, 1.0, &mut self.weight.grad);
        if let Some(b) = &mut self.bias {
            for row in d_out.chunks_exact(self.out_dim) {
                for (g, d) in b.grad.iter_mut().zip(row) {
                    *g += d;
                }
            }
        }
        Ok(need_input_grad.then(|| {
            let mut dx = vec![0.0; rows * self.in_dim];
            gemm(rows, self.out_dim, self.in_dim, d_out, false, &self.weight.value, false, 0.0, &mut dx);
            dx
        }))
    }
}

impl Parameterized for Affine {
    fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.weight];
        v.extend(self.bias.as_ref());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.weight];
        v.extend(self.bias.as_mut());
        v
    }
}
