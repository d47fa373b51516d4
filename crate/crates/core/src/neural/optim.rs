use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::param::Param;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// AdamW with decoupled weight decay and bias-corrected moments.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    pub lr: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(config: AdamWConfig, lr: f64) -> Self {
        Self {
            config,
            lr,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every trainable parameter from its accumulated gradient.
    /// Parameters must be passed in the same order on every call.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        for p in params.iter().filter(|p| p.trainable) {
            if let Some(i) = p.grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of {}[{i}] is {} at optimizer step {}",
                    p.name,
                    p.grad[i],
                    self.step + 1
                )));
            }
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        }
        assert_eq!(self.first.len(), params.len(), "parameter list changed between steps");
        self.step += 1;
        let c = &self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        let decay = 1.0 - self.lr * c.weight_decay;
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            if !p.trainable {
                continue;
            }
            for i in 0..p.value.len() {
                let g = p.grad[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.value[i] = p.value[i] * decay - self.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub base_lr: f64,
    pub total_epochs: usize,
    pub floor_lr: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            base_lr: 1e-3,
            total_epochs: 50,
            floor_lr: 0.0,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > self.floor_lr && self.floor_lr >= 0.0) || self.total_epochs == 0 {
            return Err(Error::Config(format!("invalid schedule {self:?}")));
        }
        Ok(())
    }
}

/// Per-epoch cosine decay from `base_lr` at epoch 0 to `floor_lr` at the last epoch.
pub fn cosine_lr(schedule: &ScheduleConfig, epoch: usize) -> f64 {
    let span = schedule.base_lr - schedule.floor_lr;
    if schedule.total_epochs <= 1 {
        return schedule.base_lr;
    }
    let t = epoch.min(schedule.total_epochs - 1) as f64 / (schedule.total_epochs - 1) as f64;
    schedule.floor_lr + 0.5 * span * (1.0 + (PI * t).cos())
}
