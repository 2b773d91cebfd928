//! Rebalancing classification pipeline for probability-vector features.
//!
//! The crate covers the tabular half of a two-stage image-classification
//! workflow: an upstream network turns images into per-class probability
//! vectors, and this library takes over from there — ingesting or
//! synthesizing those vectors, balancing the training split with SMOTE,
//! training class-weighted classifiers (linear models, Gaussian naive Bayes,
//! decision trees, random forests, extremely randomized trees, and a voting
//! ensemble), and scoring predictions with multiclass accuracy, precision,
//! recall, F1, and specificity under micro or macro averaging.
//!
//! Everything randomized takes an explicit 64-bit seed and is reproducible
//! bit for bit across runs of the same build. The [`pipeline`] module wires
//! the stages into a config-driven experiment runner; the `probalance` CLI
//! wraps it.

pub mod data;
pub mod error;
pub mod kv;
pub mod linear;
pub mod resample;
pub mod synth;

mod rng;

pub use data::{class_counts, load_csv, save_csv, stratified_split, ClassDistribution, Dataset, SplitSpec};
pub use error::{Error, Result};
pub use linear::{balanced_class_weights, ClassWeights, LinearKind, LinearModel, TrainConfig};
pub use resample::{knn_within_class, smote, SmoteParams, SmoteTarget};
pub use synth::{generate, preset, GeneratorSpec};
