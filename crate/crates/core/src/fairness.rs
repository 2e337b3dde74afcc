//! Group-fairness auditing for binary classification with a binary sensitive
//! attribute: demographic parity, equal opportunity, and equalized-odds gaps,
//! plus sensitive-attribute noise handling under the mutually contaminated
//! model (simulated contamination and the scaling-factor correction for the
//! demographic-parity gap).
//!
//! Convention: group 0 (A=0) is the unprivileged group, and signed gaps are
//! group 0 minus group 1.

use serde::Serialize;
use thiserror::Error;

use crate::classification::predictive_distribution;
use crate::dataset::{Dataset, Group, Label, Prediction};
use crate::lab::rng::{split, CounterRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FairnessError {
    #[error("example {id} has no sensitive-attribute group")]
    MissingGroup { id: String },
    #[error("only group {present} is present; gaps are undefined")]
    SingleGroupOnly { present: usize, rates: Box<GroupRates> },
    #[error("fairness audit requires a binary task, got {classes} classes")]
    NotBinary { classes: usize },
    #[error("noise rates must each lie in [0,1), got rho0={rho0}, rho1={rho1}")]
    InvalidNoise { rho0: f64, rho1: f64 },
    #[error("rho0 + rho1 = {sum} >= 1; the observed gap carries no sign information")]
    NoiseTooLarge { sum: f64 },
    #[error("decision threshold {0} outside [0,1]")]
    ThresholdOutOfRange(f64),
    #[error("fairness audit requires classification predictions, got {got}")]
    WrongPredictions { got: &'static str },
}

/// Counting statistics for one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupRateBlock {
    pub count: usize,
    /// P(Yhat = 1 | A = g).
    pub positive_rate: f64,
    /// P(Yhat = 1 | A = g, Y = 1); `None` when the group has no positives.
    pub true_positive_rate: Option<f64>,
    /// P(Yhat = 1 | A = g, Y = 0); `None` when the group has no negatives.
    pub false_positive_rate: Option<f64>,
}

/// Per-group rates at a fixed decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRates {
    pub group0: Option<GroupRateBlock>,
    pub group1: Option<GroupRateBlock>,
    /// The threshold used to binarize predictions, echoed for auditability.
    pub decision_threshold: f64,
}

/// Fairness gaps. DP and EQ are signed (group 0 minus group 1); EO sums the
/// absolute TPR and FPR differences. A gap is `None` when one of its
/// conditioning strata is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisparityReport {
    pub dp_gap: f64,
    pub eq_gap: Option<f64>,
    pub eo_gap: Option<f64>,
}

/// Flip probabilities of the mutually contaminated noise model: the chance
/// that a true group-g label is observed as the other group depends only on
/// g itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseRates {
    rho0: f64,
    rho1: f64,
}

impl NoiseRates {
    /// Each rate must lie in [0, 1). The additional rho0 + rho1 < 1
    /// requirement applies only when correcting gaps and is enforced by
    /// [`corrected_dp`]; contamination itself is well defined up to
    /// rho0 = rho1 = 0.5 and beyond.
    pub fn new(rho0: f64, rho1: f64) -> Result<Self, FairnessError> {
        let ok = |r: f64| (0.0..1.0).contains(&r);
        if !ok(rho0) || !ok(rho1) {
            return Err(FairnessError::InvalidNoise { rho0, rho1 });
        }
        Ok(Self { rho0, rho1 })
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    fn rate_for(&self, group: Group) -> f64 {
        match group {
            Group::A0 => self.rho0,
            Group::A1 => self.rho1,
        }
    }
}

/// Positive-prediction, true-positive, and false-positive rates per group.
///
/// Predictions binarize as Yhat = 1 iff p_1 >= `decision_threshold`; MC
/// classification sets are averaged first. Every example must carry a group.
/// When only one group is present the rates are still computed and returned
/// inside [`FairnessError::SingleGroupOnly`].
pub fn group_rates(dataset: &Dataset, decision_threshold: f64) -> Result<GroupRates, FairnessError> {
    if !(0.0..=1.0).contains(&decision_threshold) {
        return Err(FairnessError::ThresholdOutOfRange(decision_threshold));
    }
    // (predicted positive, label positive) tallies per group:
    // [n, n_pos_pred, n_y1, n_pred1_y1, n_y0, n_pred1_y0]
    let mut tallies = [[0usize; 6]; 2];
    for example in dataset.examples() {
        let group = example
            .group
            .ok_or_else(|| FairnessError::MissingGroup { id: example.id.clone() })?;
        let positive_prob = positive_probability(example)?;
        let predicted_positive = positive_prob >= decision_threshold;
        let label_positive = match example.label {
            Label::Class(k) => k == 1,
            Label::Value(_) => {
                return Err(FairnessError::WrongPredictions { got: "regression labels" })
            }
        };
        let t = &mut tallies[group.index()];
        t[0] += 1;
        if predicted_positive {
            t[1] += 1;
        }
        if label_positive {
            t[2] += 1;
            if predicted_positive {
                t[3] += 1;
            }
        } else {
            t[4] += 1;
            if predicted_positive {
                t[5] += 1;
            }
        }
    }
    let block = |t: &[usize; 6]| -> Option<GroupRateBlock> {
        if t[0] == 0 {
            return None;
        }
        let rate = |num: usize, den: usize| {
            if den == 0 {
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        Some(GroupRateBlock {
            count: t[0],
            positive_rate: t[1] as f64 / t[0] as f64,
            true_positive_rate: rate(t[3], t[2]),
            false_positive_rate: rate(t[5], t[4]),
        })
    };
    let rates = GroupRates {
        group0: block(&tallies[0]),
        group1: block(&tallies[1]),
        decision_threshold,
    };
    match (&rates.group0, &rates.group1) {
        (Some(_), Some(_)) => Ok(rates),
        (Some(_), None) => Err(FairnessError::SingleGroupOnly { present: 0, rates: Box::new(rates) }),
        (None, Some(_)) => Err(FairnessError::SingleGroupOnly { present: 1, rates: Box::new(rates) }),
        (None, None) => Err(FairnessError::SingleGroupOnly { present: 0, rates: Box::new(rates) }),
    }
}

/// Demographic-parity, equal-opportunity, and equalized-odds gaps from the
/// per-group rates. Gaps whose conditioning strata are empty come back as
/// `None` rather than failing the whole report.
pub fn disparity(rates: &GroupRates) -> Result<DisparityReport, FairnessError> {
    let (g0, g1) = match (&rates.group0, &rates.group1) {
        (Some(g0), Some(g1)) => (g0, g1),
        (Some(_), None) => {
            return Err(FairnessError::SingleGroupOnly {
                present: 0,
                rates: Box::new(rates.clone()),
            })
        }
        _ => {
            return Err(FairnessError::SingleGroupOnly {
                present: 1,
                rates: Box::new(rates.clone()),
            })
        }
    };
    let eq_gap = match (g0.true_positive_rate, g1.true_positive_rate) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    let fpr_gap = match (g0.false_positive_rate, g1.false_positive_rate) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    let eo_gap = match (eq_gap, fpr_gap) {
        (Some(tpr), Some(fpr)) => Some(tpr.abs() + fpr.abs()),
        _ => None,
    };
    Ok(DisparityReport { dp_gap: g0.positive_rate - g1.positive_rate, eq_gap, eo_gap })
}

/// Flip each example's observed group independently with the probability
/// attached to its true group. Deterministic given the seed; examples
/// without a group are passed through unchanged.
pub fn contaminate(dataset: &Dataset, noise: &NoiseRates, seed: u64) -> Dataset {
    let mut rng = CounterRng::new(split(seed, 0x47524F55)); // stream tag "GROU"
    let examples = dataset
        .examples()
        .iter()
        .map(|example| {
            let group = example.group.map(|g| {
                if rng.uniform() < noise.rate_for(g) {
                    g.flipped()
                } else {
                    g
                }
            });
            crate::dataset::LabeledExample { group, ..example.clone() }
        })
        .collect();
    Dataset::from_parts_unchecked(dataset.task(), examples)
}

/// Recover the true demographic-parity gap from the gap observed under
/// contamination: observed gaps shrink linearly by (1 - rho0 - rho1).
pub fn corrected_dp(observed_gap: f64, noise: &NoiseRates) -> Result<f64, FairnessError> {
    let sum = noise.rho0 + noise.rho1;
    if sum >= 1.0 {
        return Err(FairnessError::NoiseTooLarge { sum });
    }
    Ok(observed_gap / (1.0 - sum))
}

fn positive_probability(example: &crate::dataset::LabeledExample) -> Result<f64, FairnessError> {
    let dist = match &example.prediction {
        Prediction::Point(dist) => dist.clone(),
        Prediction::McClassification(set) => predictive_distribution(set),
        Prediction::McRegression(_) => {
            return Err(FairnessError::WrongPredictions { got: "mc_regression" })
        }
    };
    if dist.num_classes() != 2 {
        return Err(FairnessError::NotBinary { classes: dist.num_classes() });
    }
    Ok(dist.probs()[1])
}
