use serde::{Deserialize, Serialize};

use crate::domain::{RefType, Tier};

/// Outcome of one test reference under one (config, seed, fold) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub ref_id: String,
    pub config_name: String,
    pub seed: u64,
    pub fold: usize,
    pub room_id: String,
    /// 1-based.
    pub rank_of_target: usize,
    pub num_candidates: usize,
    pub tier: Tier,
    pub ref_type: RefType,
}

/// Gate and loss trajectory of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRecord {
    pub config_name: String,
    pub seed: u64,
    pub fold: usize,
    pub test_room: String,
    pub alpha_trace: Vec<f64>,
    pub epoch_loss: Vec<f64>,
}

impl AlphaRecord {
    pub fn alpha_final(&self) -> f64 {
        *self.alpha_trace.last().expect("at least one epoch")
    }
}
