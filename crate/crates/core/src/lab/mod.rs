//! Desk-scale probabilistic model lab: synthetic data, hand-rolled MLP
//! training, deep ensembles, and MC dropout. Produces the MC prediction sets
//! the metric modules consume.

pub mod ensemble;
pub mod mlp;
pub mod rng;
pub mod synth;

use thiserror::Error;

pub use ensemble::{mc_dropout_predict, train_ensemble, McPrediction, MlpEnsemble};
pub use mlp::{mean_nll, mean_nll_gradient, train_mlp, Head, HeadKind, MlpParameters, TrainConfig};
pub use synth::{synth_classification, synth_regression, LabDataset, Targets};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid lab data: {detail}")]
    InvalidData { detail: String },
    #[error("invalid training configuration")]
    InvalidConfig,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergedTraining { epoch: usize },
    #[error("input has {got} dimensions, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("head mismatch: expected {expected}, got {got}")]
    HeadMismatch { expected: &'static str, got: &'static str },
    #[error("dropout rate must lie in [0,1), got {0}")]
    InvalidDropoutRate(f64),
    #[error("derived member seeds collide for master seed {master}")]
    SeedCollision { master: u64 },
    #[error("model serialization failed: {detail}")]
    Serialization { detail: String },
    #[error("model io failed: {detail}")]
    Io { detail: String },
}
