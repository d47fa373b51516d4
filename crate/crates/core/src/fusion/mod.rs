//! The fusion model: pose and text pathways, the gate, training and prediction.

pub mod checkpoint;
pub mod config;
pub mod model;
pub mod sample;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{config_hash, ModelConfig, PoseCategory, TextCategory, TrainConfig, MATRIX_CONFIGS};
pub use model::{rank_candidates, rank_of, CategoryInputs, FusionModel, GradProbe, Projections, StackedBatch};
pub use sample::{build_samples, CategoryIndex, FeatureCache, Sample};
pub use train::{train_model, RunSeeds, TrainOutcome};
