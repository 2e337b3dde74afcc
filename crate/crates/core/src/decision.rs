//! Decision theory under uncertainty: expected losses, the cost-optimal
//! action, the reject option, and coverage/risk sweeps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CategoricalDistribution, Dataset, Label, Prediction, Task};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("loss matrix has {outcomes} outcomes but the distribution has {classes} classes")]
    ArityMismatch { outcomes: usize, classes: usize },
    #[error("loss matrix needs at least one action")]
    NoActions,
    #[error("loss matrix has {rows} cost rows for {actions} actions")]
    CostShapeMismatch { rows: usize, actions: usize },
    #[error("loss matrix row {action} has {got} entries, expected {expected}")]
    RaggedCostRow { action: usize, got: usize, expected: usize },
    #[error("cost for action {action}, outcome {outcome} must be finite and >= 0, got {value}")]
    InvalidCost { action: usize, outcome: usize, value: f64 },
    #[error("threshold {0} outside [0,1]")]
    ThresholdOutOfRange(f64),
    #[error("operation requires point classification predictions, got {got}")]
    WrongPredictions { got: &'static str },
}

/// Cost of taking each action under each outcome. Outcomes are ordered like
/// the class indices of the distributions the matrix is applied to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLossMatrix")]
pub struct LossMatrix {
    actions: Vec<String>,
    outcomes: Vec<String>,
    cost: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawLossMatrix {
    actions: Vec<String>,
    outcomes: Vec<String>,
    cost: Vec<Vec<f64>>,
}

impl TryFrom<RawLossMatrix> for LossMatrix {
    type Error = DecisionError;

    fn try_from(raw: RawLossMatrix) -> Result<Self, Self::Error> {
        LossMatrix::new(raw.actions, raw.outcomes, raw.cost)
    }
}

impl LossMatrix {
    pub fn new(
        actions: Vec<String>,
        outcomes: Vec<String>,
        cost: Vec<Vec<f64>>,
    ) -> Result<Self, DecisionError> {
        if actions.is_empty() {
            return Err(DecisionError::NoActions);
        }
        if cost.len() != actions.len() {
            return Err(DecisionError::CostShapeMismatch {
                rows: cost.len(),
                actions: actions.len(),
            });
        }
        for (action, row) in cost.iter().enumerate() {
            if row.len() != outcomes.len() {
                return Err(DecisionError::RaggedCostRow {
                    action,
                    got: row.len(),
                    expected: outcomes.len(),
                });
            }
            for (outcome, &value) in row.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(DecisionError::InvalidCost { action, outcome, value });
                }
            }
        }
        Ok(Self { actions, outcomes, cost })
    }

    /// The 0-1 loss over `classes` outcomes: action k costs 0 on outcome k
    /// and 1 elsewhere. Its optimal action is the argmax class.
    pub fn zero_one(classes: usize) -> Self {
        let names: Vec<String> = (0..classes).map(|k| k.to_string()).collect();
        let cost = (0..classes)
            .map(|a| (0..classes).map(|y| if a == y { 0.0 } else { 1.0 }).collect())
            .collect();
        Self { actions: names.clone(), outcomes: names, cost }
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn cost(&self, action: usize, outcome: usize) -> f64 {
        self.cost[action][outcome]
    }
}

/// Outcome of a decision rule for one prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub kind: DecisionKind,
    /// Expected cost of each action under the predictive distribution.
    pub expected_losses: Vec<f64>,
    /// Estimated probability the argmax prediction is wrong (1 - max prob).
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    /// Take the named action (index into the loss matrix actions).
    Predict { action: usize, name: String },
    /// Defer to an expert.
    Abstain,
}

/// Expected cost of every action: for action a, sum over classes of
/// L(a | c_k) p_k.
pub fn expected_loss(
    dist: &CategoricalDistribution,
    loss: &LossMatrix,
) -> Result<Vec<f64>, DecisionError> {
    if loss.outcomes.len() != dist.num_classes() {
        return Err(DecisionError::ArityMismatch {
            outcomes: loss.outcomes.len(),
            classes: dist.num_classes(),
        });
    }
    Ok(loss
        .cost
        .iter()
        .map(|row| row.iter().zip(dist.probs()).map(|(&c, &p)| c * p).sum())
        .collect())
}

/// The action minimizing expected loss; ties break toward the lowest action
/// index (declaration order).
pub fn optimal_action(
    dist: &CategoricalDistribution,
    loss: &LossMatrix,
) -> Result<Decision, DecisionError> {
    let expected_losses = expected_loss(dist, loss)?;
    let mut best = 0;
    for (action, &value) in expected_losses.iter().enumerate().skip(1) {
        if value < expected_losses[best] {
            best = action;
        }
    }
    Ok(Decision {
        kind: DecisionKind::Predict { action: best, name: loss.actions[best].clone() },
        expected_losses,
        error_estimate: 1.0 - dist.max_prob(),
    })
}

/// The reject option: abstain when the estimated error probability
/// (1 - max prob) exceeds `threshold`, otherwise act optimally.
pub fn reject(
    dist: &CategoricalDistribution,
    loss: &LossMatrix,
    threshold: f64,
) -> Result<Decision, DecisionError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(DecisionError::ThresholdOutOfRange(threshold));
    }
    let decision = optimal_action(dist, loss)?;
    if decision.error_estimate > threshold {
        Ok(Decision { kind: DecisionKind::Abstain, ..decision })
    } else {
        Ok(decision)
    }
}

/// One point of a coverage/risk sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveragePoint {
    pub threshold: f64,
    /// Fraction of examples on which a prediction was made.
    pub coverage: f64,
    /// Mean true-label cost of the chosen actions on the accepted set;
    /// `None` when everything was rejected.
    pub mean_cost_accepted: Option<f64>,
    pub abstentions: usize,
}

/// Apply [`reject`] at each threshold over a point-classification dataset,
/// scoring accepted decisions against the true labels.
pub fn coverage_curve(
    dataset: &Dataset,
    loss: &LossMatrix,
    thresholds: &[f64],
) -> Result<Vec<CoveragePoint>, DecisionError> {
    let pairs = point_predictions(dataset)?;
    let mut curve = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let mut accepted = 0usize;
        let mut cost_total = 0.0;
        for (example, dist) in &pairs {
            let decision = reject(dist, loss, threshold)?;
            if let DecisionKind::Predict { action, .. } = decision.kind {
                let outcome = match example.label {
                    Label::Class(k) => k,
                    Label::Value(_) => unreachable!("point_predictions checks the task"),
                };
                accepted += 1;
                cost_total += loss.cost(action, outcome);
            }
        }
        let n = pairs.len();
        curve.push(CoveragePoint {
            threshold,
            coverage: accepted as f64 / n as f64,
            mean_cost_accepted: if accepted == 0 {
                None
            } else {
                Some(cost_total / accepted as f64)
            },
            abstentions: n - accepted,
        });
    }
    Ok(curve)
}

/// Expected cost of each finite action against a predictive Gaussian
/// mixture, estimated by Monte-Carlo expectation over `draws` seeded samples
/// (continuous-outcome counterpart of [`expected_loss`]).
///
/// Costs are arbitrary functions of the realized outcome; all actions are
/// scored on the same draws, so differences are low-variance.
pub fn expected_loss_mc<F>(
    mixture: &crate::dataset::McRegressionSet,
    action_costs: &[F],
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>, DecisionError>
where
    F: Fn(f64) -> f64,
{
    if action_costs.is_empty() {
        return Err(DecisionError::NoActions);
    }
    let mut rng = crate::lab::rng::CounterRng::new(seed);
    let components = mixture.components();
    let mut totals = vec![0.0; action_costs.len()];
    for _ in 0..draws {
        let component = &components[rng.index(components.len())];
        let outcome = component.mean + component.std_dev() * rng.standard_normal();
        for (total, cost) in totals.iter_mut().zip(action_costs) {
            *total += cost(outcome);
        }
    }
    for total in &mut totals {
        *total /= draws as f64;
    }
    Ok(totals)
}

/// Index of the action minimizing [`expected_loss_mc`]; ties break toward
/// the lowest index. Uses 10^4 draws.
pub fn optimal_action_mc<F>(
    mixture: &crate::dataset::McRegressionSet,
    action_costs: &[F],
    seed: u64,
) -> Result<(usize, Vec<f64>), DecisionError>
where
    F: Fn(f64) -> f64,
{
    let losses = expected_loss_mc(mixture, action_costs, 10_000, seed)?;
    let mut best = 0;
    for (action, &value) in losses.iter().enumerate().skip(1) {
        if value < losses[best] {
            best = action;
        }
    }
    Ok((best, losses))
}

fn point_predictions(
    dataset: &Dataset,
) -> Result<Vec<(&crate::dataset::LabeledExample, &CategoricalDistribution)>, DecisionError> {
    if dataset.task() != Task::Classification {
        return Err(DecisionError::WrongPredictions { got: "regression" });
    }
    dataset
        .examples()
        .iter()
        .map(|example| match &example.prediction {
            Prediction::Point(dist) => Ok((example, dist)),
            other => Err(DecisionError::WrongPredictions { got: other.variant_name() }),
        })
        .collect()
}
