//! Pool-based active learning with second-order acquisition.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: IDX/CSV loaders, synthetic blobs, pool partitioning and the
//!   simulated label oracle.
//! - [`network`]: a small ReLU multilayer perceptron trained with Adam.
//! - [`dynamics`]: per-sample prediction-switch and forgetting-event counters.
//! - [`mixture`]: two-component 1-D Gaussian mixture fit by EM.
//! - [`strategies`]: acquisition functions (random, entropy, least confidence,
//!   coreset, switch top-k and Gaussian switch sampling).
//! - [`engine`]: the round loop, oracle-importance analysis mode and suites.
//! - [`analysis`]: area under the difference curve, histograms, smoothed KL
//!   divergence and Welch's t-test.

pub mod analysis;
pub mod dataset;
pub mod dynamics;
pub mod engine;
pub mod matrix;
pub mod mixture;
pub mod network;
pub mod seed;
pub mod strategies;

pub use dataset::{Dataset, DatasetError, LabelOracle, PoolPartition};
pub use engine::{ExperimentConfig, LearningCurve, Mode, RoundRecord, RunOutput};
pub use matrix::Matrix;
pub use mixture::{EmConfig, EmOutcome, Gmm1D};
pub use network::{MlpConfig, MlpModel, TrainConfig};
pub use strategies::Strategy;
