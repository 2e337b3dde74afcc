//! Deep ensembles and MC-dropout prediction sets.
//!
//! An ensemble is M independently initialized networks trained on the same
//! data, each from a seed derived by [`split`](crate::lab::rng::split) from
//! the master seed. At prediction time the per-member outputs, ordered by
//! member index, form the MC prediction set consumed by the uncertainty
//! metrics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{McClassificationSet, McRegressionSet};
use crate::lab::mlp::{mc_dropout_forward, train_mlp, HeadKind, MlpParameters, TrainConfig};
use crate::lab::rng::split;
use crate::lab::synth::LabDataset;
use crate::lab::LabError;

/// M trained members sharing one architecture and training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpEnsemble {
    config: TrainConfig,
    members: Vec<MlpParameters>,
}

/// A prediction set from an ensemble or dropout sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum McPrediction {
    Classification(McClassificationSet),
    Regression(McRegressionSet),
}

impl McPrediction {
    pub fn num_samples(&self) -> usize {
        match self {
            McPrediction::Classification(set) => set.num_samples(),
            McPrediction::Regression(set) => set.num_samples(),
        }
    }

    pub fn as_classification(&self) -> Option<&McClassificationSet> {
        match self {
            McPrediction::Classification(set) => Some(set),
            McPrediction::Regression(_) => None,
        }
    }

    pub fn as_regression(&self) -> Option<&McRegressionSet> {
        match self {
            McPrediction::Regression(set) => Some(set),
            McPrediction::Classification(_) => None,
        }
    }
}

/// Train an M-member ensemble. Member i trains with seed
/// `split(config.seed, i)`; the derived seeds must be pairwise distinct.
pub fn train_ensemble(
    data: &LabDataset,
    members: usize,
    config: &TrainConfig,
    head: HeadKind,
) -> Result<MlpEnsemble, LabError> {
    if members == 0 {
        return Err(LabError::InvalidConfig);
    }
    let mut seeds: Vec<u64> = (0..members as u64).map(|i| split(config.seed, i)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() != members {
        return Err(LabError::SeedCollision { master: config.seed });
    }
    let trained = (0..members as u64)
        .map(|i| {
            let member_config = TrainConfig { seed: split(config.seed, i), ..*config };
            train_mlp(data, &member_config, head)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MlpEnsemble { config: *config, members: trained })
}

impl MlpEnsemble {
    pub fn members(&self) -> &[MlpParameters] {
        &self.members
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn num_members(&self) -> usize {
        self.members.len()
    }

    /// Per-member predictions at `x`, ordered by member index: a Gaussian
    /// component per member for regression heads (homoscedastic members
    /// report the configured noise variance), a class distribution per
    /// member for the softmax head.
    pub fn predict(&self, x: &[f64]) -> Result<McPrediction, LabError> {
        match self.members[0].head.kind() {
            HeadKind::Softmax => {
                let samples = self
                    .members
                    .iter()
                    .map(|m| m.predict_distribution(x))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(McPrediction::Classification(
                    McClassificationSet::new(samples).expect("members share one class count"),
                ))
            }
            _ => {
                let components = self
                    .members
                    .iter()
                    .map(|m| m.predict_component(x))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(McPrediction::Regression(
                    McRegressionSet::new(components).expect("at least one member"),
                ))
            }
        }
    }

    /// Serialize architecture, config, and weights as JSON, sufficient for a
    /// bit-exact reload.
    pub fn save(&self, path: &Path) -> Result<(), LabError> {
        let json = serde_json::to_string(self).map_err(|e| LabError::Serialization {
            detail: e.to_string(),
        })?;
        std::fs::write(path, json).map_err(|e| LabError::Io { detail: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let raw =
            std::fs::read_to_string(path).map_err(|e| LabError::Io { detail: e.to_string() })?;
        serde_json::from_str(&raw).map_err(|e| LabError::Serialization { detail: e.to_string() })
    }
}

/// T stochastic forward passes of a single model with dropout masks on the
/// hidden units, assembled into a prediction set.
pub fn mc_dropout_predict(
    model: &MlpParameters,
    x: &[f64],
    samples: usize,
    rate: f64,
    seed: u64,
) -> Result<McPrediction, LabError> {
    let outputs = mc_dropout_forward(model, x, samples, rate, seed)?;
    match model.head.kind() {
        HeadKind::Softmax => {
            let samples = outputs.iter().map(|out| crate::lab::mlp::softmax(out)).collect();
            Ok(McPrediction::Classification(
                McClassificationSet::new(samples).expect("dropout samples share a class count"),
            ))
        }
        _ => {
            let components = outputs
                .iter()
                .map(|out| model_component(model, out))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(McPrediction::Regression(
                McRegressionSet::new(components).expect("at least one sample"),
            ))
        }
    }
}

fn model_component(
    model: &MlpParameters,
    out: &[f64],
) -> Result<crate::dataset::GaussianComponent, LabError> {
    use crate::dataset::GaussianComponent;
    use crate::lab::mlp::Head;
    match model.head {
        Head::Homoscedastic { sigma2 } => Ok(GaussianComponent::new_unchecked(out[0], sigma2)),
        Head::Heteroscedastic => {
            Ok(GaussianComponent::new_unchecked(out[0], out[1].clamp(-700.0, 700.0).exp()))
        }
        Head::Softmax { .. } => {
            Err(LabError::HeadMismatch { expected: "regression head", got: "softmax" })
        }
    }
}
