use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::neural::{AdamWConfig, ScheduleConfig};

/// Category input of the pose pathway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseCategory {
    None,
    Learned16,
    /// The text store's frozen category vectors fed as pose input.
    FrozenSemantic,
}

/// Category input of the text pathway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextCategory {
    None,
    Learned16,
    FrozenSemantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub use_pose: bool,
    pub use_text: bool,
    pub pose_cat: PoseCategory,
    pub text_cat: TextCategory,
    pub hidden: usize,
    pub pose_feat_dim: usize,
    pub learned_cat_dim: usize,
    pub text_emb_dim: usize,
    pub dropout: f64,
    pub activation: Activation,
    pub projector_bias: bool,
    pub projector_dropout: bool,
    /// Treat the z-normalization mean and std as constants in the backward pass.
    pub znorm_stop_gradient: bool,
    pub seed: u64,
}

/// The eight rows of the ablation matrix, in report order.
pub const MATRIX_CONFIGS: [&str; 8] =
    ["P", "P_cat", "T", "T_minilm", "PT_nocat", "PT", "PT_minilm", "PT_minilm_both"];

impl ModelConfig {
    fn base(name: &str, text_emb_dim: usize) -> Self {
        Self {
            name: name.to_string(),
            use_pose: true,
            use_text: true,
            pose_cat: PoseCategory::None,
            text_cat: TextCategory::None,
            hidden: 128,
            pose_feat_dim: crate::affordance::POSE_FEATURE_DIM,
            learned_cat_dim: 16,
            text_emb_dim,
            dropout: 0.3,
            activation: Activation::Relu,
            projector_bias: true,
            projector_dropout: true,
            znorm_stop_gradient: false,
            seed: 0,
        }
    }

    /// Named configuration from the ablation matrix.
    pub fn preset(name: &str, text_emb_dim: usize) -> Result<Self> {
        let mut c = Self::base(name, text_emb_dim);
        match name {
            "P" => c.use_text = false,
            "P_cat" => {
                c.use_text = false;
                c.pose_cat = PoseCategory::Learned16;
            }
            "T" => {
                c.use_pose = false;
                c.text_cat = TextCategory::Learned16;
            }
            "T_minilm" => {
                c.use_pose = false;
                c.text_cat = TextCategory::FrozenSemantic;
            }
            "PT_nocat" => {}
            "PT" => {
                c.pose_cat = PoseCategory::Learned16;
                c.text_cat = TextCategory::Learned16;
            }
            "PT_minilm" => {
                c.pose_cat = PoseCategory::Learned16;
                c.text_cat = TextCategory::FrozenSemantic;
            }
            "PT_minilm_both" => {
                c.pose_cat = PoseCategory::FrozenSemantic;
                c.text_cat = TextCategory::FrozenSemantic;
            }
            other => return Err(Error::Config(format!("unknown model config {other:?}"))),
        }
        Ok(c)
    }

    pub fn is_fused(&self) -> bool {
        self.use_pose && self.use_text
    }

    pub fn needs_frozen_categories(&self) -> bool {
        (self.use_text && self.text_cat == TextCategory::FrozenSemantic)
            || (self.use_pose && self.pose_cat == PoseCategory::FrozenSemantic)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.use_pose && !self.use_text {
            return Err(Error::Config(format!("{}: at least one pathway must be enabled", self.name)));
        }
        if self.hidden == 0 || self.pose_feat_dim == 0 || self.text_emb_dim == 0 {
            return Err(Error::Config(format!("{}: zero-sized layer", self.name)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("{}: dropout must lie in [0, 1)", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub adamw: AdamWConfig,
    pub schedule: ScheduleConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            adamw: AdamWConfig::default(),
            schedule: ScheduleConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be > 0".into()));
        }
        self.schedule.validate()
    }
}

/// Hex SHA-256 of the canonical JSON serialization of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(json))
}
