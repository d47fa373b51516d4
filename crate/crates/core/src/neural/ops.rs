//! Elementwise and per-sample operations with hand-written backward passes.

use rand::Rng;

/// Stabilizer added to the population std in [`znorm`].
pub const ZNORM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn relu_inplace(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Gradient through ReLU given its *output*; the subgradient at 0 is 0.
pub fn relu_backward(y: &[f64], d_out: &mut [f64]) {
    for (d, &v) in d_out.iter_mut().zip(y) {
        if v <= 0.0 {
            *d = 0.0;
        }
    }
}

/// Inverted dropout. In train mode with `p > 0` each element is zeroed with
/// probability `p` and survivors are scaled by `1 / (1 - p)`; the returned
/// mask holds the per-element multiplier for the backward pass.
pub fn dropout<R: Rng + ?Sized>(x: &mut [f64], p: f64, mode: Mode, rng: &mut R) -> Option<Vec<f64>> {
    assert!((0.0..1.0).contains(&p), "dropout probability must lie in [0, 1)");
    if mode == Mode::Eval || p == 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    // Drop iff a uniform 32-bit draw falls below p * 2^32.
    let threshold = (p * 4_294_967_296.0) as u64;
    let mut draws = vec![0u32; x.len()];
    rng.fill(draws.as_mut_slice());
    let mask: Vec<f64> = draws
        .iter()
        .map(|&r| if u64::from(r) < threshold { 0.0 } else { keep })
        .collect();
    for (v, m) in x.iter_mut().zip(&mask) {
        *v *= m;
    }
    Some(mask)
}

pub fn dropout_backward(mask: Option<&[f64]>, d_out: &mut [f64]) {
    if let Some(mask) = mask {
        for (d, m) in d_out.iter_mut().zip(mask) {
            *d *= m;
        }
    }
}

/// Saved statistics of a [`znorm`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct ZNorm {
    pub output: Vec<f64>,
    pub centered: Vec<f64>,
    pub std: f64,
}

/// `(s - mean) / (std_pop + eps)` over one sample's candidate scores.
pub fn znorm(scores: &[f64]) -> ZNorm {
    assert!(!scores.is_empty(), "znorm of an empty score vector");
    let n = scores.len() as f64;
    // Identical scores center to exact zeros even when `sum / n` rounds away from them.
    let mean = if scores.iter().all(|&s| s == scores[0]) {
        scores[0]
    } else {
        scores.iter().sum::<f64>() / n
    };
    let centered: Vec<f64> = scores.iter().map(|s| s - mean).collect();
    let std = (centered.iter().map(|c| c * c).sum::<f64>() / n).sqrt();
    let denom = std + ZNORM_EPS;
    ZNorm {
        output: centered.iter().map(|c| c / denom).collect(),
        centered,
        std,
    }
}

/// Backward through [`znorm`], differentiating through the mean and std.
/// At zero std the std term is taken as 0.
pub fn znorm_backward(z: &ZNorm, d_out: &[f64]) -> Vec<f64> {
    let n = d_out.len() as f64;
    let denom = z.std + ZNORM_EPS;
    let mean_g = d_out.iter().sum::<f64>() / n;
    let dot: f64 = d_out.iter().zip(&z.centered).map(|(g, c)| g * c).sum();
    let std_term = if z.std > 0.0 { dot / (n * z.std * denom * denom) } else { 0.0 };
    d_out
        .iter()
        .zip(&z.centered)
        .map(|(g, c)| (g - mean_g) / denom - std_term * c)
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `target` under softmax(`scores`) and its gradient.
pub fn softmax_ce(scores: &[f64], target: usize) -> (f64, Vec<f64>) {
    assert!(target < scores.len(), "target index out of range");
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - scores[target];
    let mut grad: Vec<f64> = scores.iter().map(|s| (s - log_sum).exp()).collect();
    grad[target] -= 1.0;
    (loss, grad)
}
