//! Minimal reverse-mode building blocks for the fusion model. Everything is
//! 64-bit and row-major; backward passes are written by hand per layer.

pub mod affine;
pub mod embedding_table;
pub mod gradcheck;
pub mod linalg;
pub mod ops;
pub mod optim;
pub mod param;

pub use affine::Affine;
pub use embedding_table::{CategoryBranch, EmbeddingTable};
pub use gradcheck::{grad_check, Differentiable, GradCheckReport};
pub use ops::{dropout, relu, relu_backward, sigmoid, softmax_ce, znorm, znorm_backward, Mode, ZNorm};
pub use optim::{cosine_lr, AdamW, AdamWConfig, ScheduleConfig};
pub use param::{Param, Parameterized};
