//! Decoupled late fusion of pose and text evidence for resolving which 3D
//! scene object a speaker refers to.
//!
//! The pose pathway scores candidates from angular affordance features of the
//! speaker's arms, head and body; the text pathway scores them from a frozen
//! utterance embedding plus a per-object category embedding. The pathways
//! share no learned parameters and are combined by a single learned gate
//! `alpha = sigmoid(w)` over per-sample z-normalized scores.
//!
//! Modules, bottom-up:
//! - [`domain`], [`vocab`], [`dataset`]: data types, label normalization, JSONL IO
//! - [`affordance`]: the 6-D pose feature vector
//! - [`embedding`]: frozen vector stores and the pseudo-embedder
//! - [`neural`]: layers, losses, AdamW, cosine schedule, gradient checking
//! - [`fusion`]: the two pathways, the gate, training and prediction
//! - [`synth`]: synthetic scenes, gestures and references
//! - [`eval`]: LORO folds, top-k metrics, stratification, t-tests, the config matrix
//! - [`cli`]: the `poserefer` command line

pub mod affordance;
pub mod cli;
pub mod dataset;
pub mod domain;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod neural;
pub mod seed;
pub mod synth;
pub mod vocab;

pub use error::{Error, Result};
