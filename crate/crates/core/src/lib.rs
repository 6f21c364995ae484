//! Fairness-aware paper selection.
//!
//! The pipeline: encode candidate papers with author demographics into a
//! numeric feature matrix, train a small MLP acceptance scorer under a
//! demographic-parity penalty, rank every paper by predicted acceptance
//! probability, select a fixed-size slate, and score the selection against a
//! demographic-blind baseline with macro/micro diversity gains, utility gain
//! and their harmonic combination.
//!
//! Modules follow the pipeline stages:
//! - [`dataset`]: loading, validation, encoding, splitting, synthesis
//! - [`nn`]: the two-hidden-layer scorer with batch norm and Adam
//! - [`losses`]: prediction loss, parity losses, total objective
//! - [`trainer`]: the epoch/batch loop with early stopping
//! - [`selector`]: scoring and top-k slate selection
//! - [`metrics`]: gain metrics and reports

pub mod dataset;
mod error;
pub mod losses;
pub mod metrics;
pub mod nn;
pub mod selector;
pub mod trainer;

pub use dataset::{
    AuthorRecord, CareerStage, Conference, CountryClass, Dataset, FeatureMatrix, Gender, PaperId,
    PaperRecord, ProtectedAttr, Provenance, Race, SyntheticSpec,
};
pub use error::{Error, Result};
pub use losses::{FairnessConfig, FairnessMode, LossValue};
pub use metrics::{CareerWeights, GainReport, RunGains};
pub use nn::{ForwardCache, Gradients, ModelParams, OptimizerState};
pub use selector::SelectionResult;
pub use trainer::{DegeneratePolicy, TrainConfig, TrainHistory};
