//! Calibration metrics and reliability-diagram data.
//!
//! Classification: negative log-likelihood, Brier score, expected calibration
//! error (ECE) with its reliability binning, uncertainty calibration error
//! (UCE), and the accurate/certain conditional probabilities with PAvPU.
//! Regression: the probability integral transform (PIT) plus the regression
//! calibration error (RCE) and tail calibration error (TCE) computed on it.
//!
//! Point operations (`nll`, `brier`, `reliability`) take pre-averaged
//! categorical predictions; use [`to_point_dataset`] to reduce MC
//! classification sets first. `uce` and `pavpu` accept either classification
//! variant. `pit` expects raw MC regression mixtures.
//!
//! Bin accumulation runs in example order, so results are identical no matter
//! how per-example statistics were produced.

use serde::Serialize;
use thiserror::Error;

use crate::classification::{normalized_entropy, predictive_distribution};
use crate::dataset::{CategoricalDistribution, Dataset, Label, Prediction, Task};
use crate::regression::{mixture_cdf, RegressionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("example {id}: true-class probability is 0, log loss is infinite")]
    InfiniteLoss { id: String },
    #[error("example {id}: uncertainty statistic {value} outside [0,1]")]
    UnnormalizedStatistic { id: String, value: f64 },
    #[error("example {id}: {source}")]
    Regression { id: String, source: RegressionError },
    #[error("no PIT values fall in either tail; tail calibration is undefined")]
    NoTailMass,
    #[error("bin count must be at least 1")]
    NoBins,
    #[error("threshold {0} outside [0,1]")]
    ThresholdOutOfRange(f64),
    #[error("tail mass tau must lie in (0, 0.5), got {0}")]
    TauOutOfRange(f64),
    #[error("operation requires {expected}, dataset holds {got}")]
    WrongPredictions { expected: &'static str, got: &'static str },
    #[error("expected {expected} uncertainty values for {got} examples")]
    StatisticLengthMismatch { expected: usize, got: usize },
}

/// One bin of a reliability diagram over [0,1].
///
/// For ECE the statistic is confidence and the empirical rate is accuracy;
/// for UCE the statistic is normalized uncertainty and the rate is error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_statistic: f64,
    pub empirical_rate: f64,
}

/// S contiguous equal-width bins partitioning [0,1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityBinning {
    pub bins: Vec<CalibrationBin>,
    pub total: usize,
}

impl ReliabilityBinning {
    /// Render the reliability diagram as CSV with header
    /// `bin_lower,bin_upper,count,mean_confidence,accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lower,bin_upper,count,mean_confidence,accuracy\n");
        for bin in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                bin.lower, bin.upper, bin.count, bin.mean_statistic, bin.empirical_rate
            ));
        }
        out
    }
}

/// Counts of the accurate/inaccurate x certain/uncertain split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PavpuCounts {
    pub n_ac: usize,
    pub n_au: usize,
    pub n_ic: usize,
    pub n_iu: usize,
}

/// PAvPU and its two conditional probabilities. A ratio is `None` when its
/// denominator is zero (undefined, per the counts, not an error).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PavpuOutcome {
    pub counts: PavpuCounts,
    pub p_accurate_given_certain: Option<f64>,
    pub p_uncertain_given_inaccurate: Option<f64>,
    pub pavpu: f64,
}

/// Probability integral transform values, one per example, each in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PitValues {
    values: Vec<f64>,
}

impl PitValues {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Mean negative log-likelihood of the true classes, in nats per example
/// (lower is better). A zero true-class probability is an explicit
/// [`CalibrationError::InfiniteLoss`] rather than a silent clip.
pub fn nll(dataset: &Dataset) -> Result<f64, CalibrationError> {
    let mut total = 0.0;
    for (example, dist) in point_predictions(dataset)? {
        let label = class_label(example);
        let p = dist.probs()[label];
        if p == 0.0 {
            return Err(CalibrationError::InfiniteLoss { id: example.id.clone() });
        }
        total -= p.ln();
    }
    Ok(total / dataset.len() as f64)
}

/// Mean squared distance between predicted probabilities and the one-hot
/// label, averaged over classes then examples (lower is better).
pub fn brier(dataset: &Dataset) -> Result<f64, CalibrationError> {
    let mut total = 0.0;
    for (example, dist) in point_predictions(dataset)? {
        let label = class_label(example);
        let k = dist.num_classes() as f64;
        let squared: f64 = dist
            .probs()
            .iter()
            .enumerate()
            .map(|(class, &p)| {
                let target = if class == label { 1.0 } else { 0.0 };
                (p - target).powi(2)
            })
            .sum();
        total += squared / k;
    }
    Ok(total / dataset.len() as f64)
}

/// Reliability diagram over max-probability confidence plus its weighted
/// absolute gap, the expected calibration error.
///
/// Bins are equal-width over [0,1]; a boundary value v lands in bin
/// floor(v*S), with v = 1 in the last bin. Empty bins contribute zero.
pub fn reliability(
    dataset: &Dataset,
    bins: usize,
) -> Result<(ReliabilityBinning, f64), CalibrationError> {
    let pairs = point_predictions(dataset)?;
    let stats: Vec<(f64, bool)> = pairs
        .iter()
        .map(|(example, dist)| (dist.max_prob(), dist.argmax() == class_label(example)))
        .collect();
    binned_gap(&stats, bins)
}

/// Uncertainty calibration error: the weighted absolute gap between binned
/// misclassification rate and binned mean uncertainty.
///
/// `uncertainty` supplies one statistic in [0,1] per example, in dataset
/// order; [`normalized_entropies`] is the default choice.
pub fn uce(
    dataset: &Dataset,
    uncertainty: &[f64],
    bins: usize,
) -> Result<(ReliabilityBinning, f64), CalibrationError> {
    let correct = correctness(dataset)?;
    check_statistic(dataset, uncertainty)?;
    let stats: Vec<(f64, bool)> =
        uncertainty.iter().zip(&correct).map(|(&u, &ok)| (u, !ok)).collect();
    binned_gap(&stats, bins)
}

/// Conditional accuracy/uncertainty probabilities and PAvPU.
///
/// An example is certain iff its uncertainty statistic is strictly below
/// `threshold`, and accurate iff the predicted class matches the label.
pub fn pavpu(
    dataset: &Dataset,
    uncertainty: &[f64],
    threshold: f64,
) -> Result<PavpuOutcome, CalibrationError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CalibrationError::ThresholdOutOfRange(threshold));
    }
    let correct = correctness(dataset)?;
    check_statistic(dataset, uncertainty)?;
    let mut counts = PavpuCounts { n_ac: 0, n_au: 0, n_ic: 0, n_iu: 0 };
    for (&u, &accurate) in uncertainty.iter().zip(&correct) {
        let certain = u < threshold;
        match (accurate, certain) {
            (true, true) => counts.n_ac += 1,
            (true, false) => counts.n_au += 1,
            (false, true) => counts.n_ic += 1,
            (false, false) => counts.n_iu += 1,
        }
    }
    let total = (counts.n_ac + counts.n_au + counts.n_ic + counts.n_iu) as f64;
    let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
    Ok(PavpuOutcome {
        counts,
        p_accurate_given_certain: ratio(counts.n_ac, counts.n_ac + counts.n_ic),
        p_uncertain_given_inaccurate: ratio(counts.n_iu, counts.n_ic + counts.n_iu),
        pavpu: (counts.n_ac + counts.n_iu) as f64 / total,
    })
}

/// Normalized predictive entropy (entropy over ln K) per example: the default
/// uncertainty statistic for [`uce`] and [`pavpu`]. MC predictions are
/// averaged first, so the statistic reflects total predictive uncertainty.
pub fn normalized_entropies(dataset: &Dataset) -> Result<Vec<f64>, CalibrationError> {
    dataset
        .examples()
        .iter()
        .map(|example| match &example.prediction {
            Prediction::Point(dist) => Ok(normalized_entropy(dist)),
            Prediction::McClassification(set) => {
                Ok(normalized_entropy(&predictive_distribution(set)))
            }
            Prediction::McRegression(_) => Err(CalibrationError::WrongPredictions {
                expected: "classification predictions",
                got: "mc_regression",
            }),
        })
        .collect()
}

/// Probability integral transform: each example's predictive mixture CDF
/// evaluated at its realized target. Calibrated predictions give uniform
/// values on [0,1].
pub fn pit(dataset: &Dataset) -> Result<PitValues, CalibrationError> {
    if dataset.task() != Task::Regression {
        return Err(CalibrationError::WrongPredictions {
            expected: "regression predictions",
            got: "classification",
        });
    }
    let mut values = Vec::with_capacity(dataset.len());
    for example in dataset.examples() {
        let target = match example.label {
            Label::Value(v) => v,
            Label::Class(_) => {
                return Err(CalibrationError::WrongPredictions {
                    expected: "real-valued labels",
                    got: "class labels",
                })
            }
        };
        match &example.prediction {
            Prediction::McRegression(set) => {
                let value = mixture_cdf(set, target).map_err(|source| {
                    CalibrationError::Regression { id: example.id.clone(), source }
                })?;
                values.push(value);
            }
            other => {
                return Err(CalibrationError::WrongPredictions {
                    expected: "mc_regression",
                    got: other.variant_name(),
                })
            }
        }
    }
    Ok(PitValues::new(values))
}

/// Regression calibration error: how far PIT bin occupancy is from the
/// uniform 1/S, weighted by occupancy.
pub fn rce(pit: &PitValues, bins: usize) -> Result<f64, CalibrationError> {
    if bins == 0 {
        return Err(CalibrationError::NoBins);
    }
    let n = pit.len() as f64;
    let mut counts = vec![0usize; bins];
    for &value in pit.values() {
        counts[bin_index(value, bins)] += 1;
    }
    let uniform = 1.0 / bins as f64;
    Ok(counts
        .iter()
        .map(|&count| {
            let share = count as f64 / n;
            share * (uniform - share).abs()
        })
        .sum())
}

/// Tail calibration error with tail mass `tau`: occupancy of the two tail
/// bins (PIT < tau, PIT >= 1-tau) compared against tau itself, weighted by
/// each tail's share of the tail mass.
///
/// A calibrated model puts mass tau in each tail, driving TCE to zero.
pub fn tce(pit: &PitValues, tau: f64) -> Result<f64, CalibrationError> {
    if !(0.0 < tau && tau < 0.5) {
        return Err(CalibrationError::TauOutOfRange(tau));
    }
    let n = pit.len() as f64;
    let lower = pit.values().iter().filter(|&&v| v < tau).count();
    let upper = pit.values().iter().filter(|&&v| v >= 1.0 - tau).count();
    let tail_total = lower + upper;
    if tail_total == 0 {
        return Err(CalibrationError::NoTailMass);
    }
    let term = |count: usize| {
        let weight = count as f64 / tail_total as f64;
        weight * (tau - count as f64 / n).abs()
    };
    Ok(term(lower) + term(upper))
}

/// Reduce MC classification predictions to their averaged point
/// distributions, leaving point datasets untouched.
pub fn to_point_dataset(dataset: &Dataset) -> Result<Dataset, CalibrationError> {
    if dataset.task() != Task::Classification {
        return Err(CalibrationError::WrongPredictions {
            expected: "classification predictions",
            got: "regression",
        });
    }
    let examples = dataset
        .examples()
        .iter()
        .map(|example| {
            let prediction = match &example.prediction {
                Prediction::Point(dist) => Prediction::Point(dist.clone()),
                Prediction::McClassification(set) => {
                    Prediction::Point(predictive_distribution(set))
                }
                Prediction::McRegression(_) => unreachable!("task checked above"),
            };
            crate::dataset::LabeledExample {
                id: example.id.clone(),
                group: example.group,
                label: example.label,
                prediction,
            }
        })
        .collect();
    Ok(Dataset::from_parts_unchecked(Task::Classification, examples))
}

// ---------------------------------------------------------------------------
// shared internals
// ---------------------------------------------------------------------------

/// Bin index for a statistic in [0,1]: floor(v*S), boundary value 1 capped
/// into the last bin.
fn bin_index(value: f64, bins: usize) -> usize {
    ((value * bins as f64).floor() as usize).min(bins - 1)
}

fn binned_gap(
    stats: &[(f64, bool)],
    bins: usize,
) -> Result<(ReliabilityBinning, f64), CalibrationError> {
    if bins == 0 {
        return Err(CalibrationError::NoBins);
    }
    let mut counts = vec![0usize; bins];
    let mut stat_sums = vec![0.0f64; bins];
    let mut rate_sums = vec![0.0f64; bins];
    for &(value, event) in stats {
        let bin = bin_index(value, bins);
        counts[bin] += 1;
        stat_sums[bin] += value;
        if event {
            rate_sums[bin] += 1.0;
        }
    }
    let n = stats.len() as f64;
    let mut gap = 0.0;
    let mut out = Vec::with_capacity(bins);
    for bin in 0..bins {
        let count = counts[bin];
        let (mean_statistic, empirical_rate) = if count == 0 {
            (0.0, 0.0)
        } else {
            (stat_sums[bin] / count as f64, rate_sums[bin] / count as f64)
        };
        gap += count as f64 / n * (empirical_rate - mean_statistic).abs();
        out.push(CalibrationBin {
            lower: bin as f64 / bins as f64,
            upper: (bin + 1) as f64 / bins as f64,
            count,
            mean_statistic,
            empirical_rate,
        });
    }
    Ok((ReliabilityBinning { bins: out, total: stats.len() }, gap))
}

fn point_predictions(
    dataset: &Dataset,
) -> Result<Vec<(&crate::dataset::LabeledExample, &CategoricalDistribution)>, CalibrationError> {
    dataset
        .examples()
        .iter()
        .map(|example| match &example.prediction {
            Prediction::Point(dist) => Ok((example, dist)),
            other => Err(CalibrationError::WrongPredictions {
                expected: "point",
                got: other.variant_name(),
            }),
        })
        .collect()
}

/// Predicted-class correctness per example, reducing MC sets to their
/// averaged distribution first.
fn correctness(dataset: &Dataset) -> Result<Vec<bool>, CalibrationError> {
    dataset
        .examples()
        .iter()
        .map(|example| {
            let predicted = match &example.prediction {
                Prediction::Point(dist) => dist.argmax(),
                Prediction::McClassification(set) => predictive_distribution(set).argmax(),
                Prediction::McRegression(_) => {
                    return Err(CalibrationError::WrongPredictions {
                        expected: "classification predictions",
                        got: "mc_regression",
                    })
                }
            };
            Ok(predicted == class_label(example))
        })
        .collect()
}

fn check_statistic(dataset: &Dataset, uncertainty: &[f64]) -> Result<(), CalibrationError> {
    if uncertainty.len() != dataset.len() {
        return Err(CalibrationError::StatisticLengthMismatch {
            expected: dataset.len(),
            got: uncertainty.len(),
        });
    }
    for (example, &value) in dataset.examples().iter().zip(uncertainty) {
        if !(0.0..=1.0).contains(&value) {
            return Err(CalibrationError::UnnormalizedStatistic {
                id: example.id.clone(),
                value,
            });
        }
    }
    Ok(())
}

fn class_label(example: &crate::dataset::LabeledExample) -> usize {
    match example.label {
        Label::Class(k) => k,
        Label::Value(_) => unreachable!("classification ops validate the task first"),
    }
}
