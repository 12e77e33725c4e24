//! Streaming anomaly detection with adaptive Gaussian mixtures.
//!
//! Two flavours share one engine: a capacity-limited mixture that evicts its
//! weakest mode when full, and an unconstrained mixture that never evicts
//! and instead merges modes that overlap in Bhattacharyya distance. Samples
//! are scored one at a time; the score is one minus the normalized weight of
//! the mode that absorbed the sample.

pub mod config;
pub mod engine;
pub mod error;
pub mod features;
pub mod harness;
pub mod merge;
pub mod pca;
pub mod snapshot;
pub mod trace;
pub mod types;

pub use config::{InitialVariance, ModelConfig};
pub use engine::AdaptiveModel;
pub use error::{Error, Result};
pub use merge::MergeEvent;
pub use pca::PcaModel;
pub use snapshot::{ModelSnapshot, PcaSnapshot};
pub use trace::RunTrace;
pub use types::{FeatureVector, Label, Mixture, Mode, ModeId, ScoredSample};
