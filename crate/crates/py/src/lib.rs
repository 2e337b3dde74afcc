//! Python bindings for the uqkit core: the uncertainty metrics, calibration
//! scores, decision rules, fairness audits, and a thin wrapper over the
//! ensemble lab, all on plain Python lists and floats.
//!
//! Build with `cargo build -p uqkit-python`, rename the produced
//! `lib_uqkit.so` to `_uqkit.so` (or let `python/smoke_test.py` do it), and
//! `import _uqkit`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use uqkit::calibration;
use uqkit::classification;
use uqkit::dataset::{
    CategoricalDistribution, Dataset, GaussianComponent, Group, Label, LabeledExample,
    McClassificationSet, McRegressionSet, Prediction, Task,
};
use uqkit::decision::{self, DecisionKind, LossMatrix};
use uqkit::fairness::{self, NoiseRates};
use uqkit::lab;
use uqkit::regression;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn distribution(probs: Vec<f64>) -> PyResult<CategoricalDistribution> {
    CategoricalDistribution::new(probs).map_err(value_error)
}

fn mc_classification(samples: Vec<Vec<f64>>) -> PyResult<McClassificationSet> {
    let samples = samples
        .into_iter()
        .map(distribution)
        .collect::<PyResult<Vec<_>>>()?;
    McClassificationSet::new(samples).map_err(value_error)
}

fn mc_regression(components: Vec<(f64, f64)>) -> PyResult<McRegressionSet> {
    let components = components
        .into_iter()
        .map(|(mean, variance)| GaussianComponent::new(mean, variance).map_err(value_error))
        .collect::<PyResult<Vec<_>>>()?;
    McRegressionSet::new(components).map_err(value_error)
}

fn point_dataset(probs: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<Dataset> {
    if probs.len() != labels.len() {
        return Err(value_error("probs and labels must have equal length"));
    }
    let examples = probs
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, label))| {
            Ok(LabeledExample {
                id: i.to_string(),
                group: None,
                label: Label::Class(label),
                prediction: Prediction::Point(distribution(p)?),
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    Dataset::new(Task::Classification, examples).map_err(value_error)
}

// ---------------------------------------------------------------------------
// classification metrics
// ---------------------------------------------------------------------------

/// Shannon entropy of a probability vector, in nats.
#[pyfunction]
fn predictive_entropy(probs: Vec<f64>) -> PyResult<f64> {
    Ok(classification::predictive_entropy(&distribution(probs)?))
}

/// Entropy divided by ln K, in [0, 1].
#[pyfunction]
fn normalized_entropy(probs: Vec<f64>) -> PyResult<f64> {
    Ok(classification::normalized_entropy(&distribution(probs)?))
}

/// Element-wise mean of T sampled probability vectors.
#[pyfunction]
fn predictive_distribution(samples: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(classification::predictive_distribution(&mc_classification(samples)?)
        .probs()
        .to_vec())
}

/// (predictive_entropy, expected_entropy, mutual_information) of MC samples.
#[pyfunction]
fn entropy_decomposition(samples: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
    let d = classification::entropy_decomposition(&mc_classification(samples)?);
    Ok((d.predictive_entropy, d.expected_entropy, d.mutual_information))
}

/// 1 - f/T where f counts samples voting for the modal class.
#[pyfunction]
fn variation_ratio(samples: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(classification::variation_ratio(&mc_classification(samples)?))
}

// ---------------------------------------------------------------------------
// regression metrics
// ---------------------------------------------------------------------------

/// Mixture moments of (mean, variance) components as a dict with the
/// aleatoric/epistemic variance split.
#[pyfunction]
fn mixture_moments(py: Python<'_>, components: Vec<(f64, f64)>) -> PyResult<Py<PyDict>> {
    let m = regression::mixture_moments(&mc_regression(components)?);
    let out = PyDict::new(py);
    out.set_item("mean", m.mean)?;
    out.set_item("aleatoric_variance", m.aleatoric_variance)?;
    out.set_item("epistemic_variance", m.epistemic_variance)?;
    out.set_item("total_variance", m.total_variance)?;
    Ok(out.into())
}

/// CDF of the equally-weighted Gaussian mixture at y.
#[pyfunction]
fn mixture_cdf(components: Vec<(f64, f64)>, y: f64) -> PyResult<f64> {
    regression::mixture_cdf(&mc_regression(components)?, y).map_err(value_error)
}

/// Value below which the mixture holds `level` probability mass.
#[pyfunction]
fn percentile(components: Vec<(f64, f64)>, level: f64) -> PyResult<f64> {
    regression::percentile(&mc_regression(components)?, level).map_err(value_error)
}

/// Percentiles, central interval, quartiles, and whiskers as a dict.
#[pyfunction]
fn distribution_summary(
    py: Python<'_>,
    components: Vec<(f64, f64)>,
    levels: Vec<f64>,
    coverage: f64,
) -> PyResult<Py<PyDict>> {
    let summary = regression::distribution_summary(&mc_regression(components)?, &levels, coverage)
        .map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("percentiles", summary.percentiles)?;
    out.set_item(
        "interval",
        (summary.interval.lower, summary.interval.upper, summary.interval.coverage),
    )?;
    out.set_item("quartiles", summary.quartiles)?;
    out.set_item("whiskers", summary.whiskers)?;
    Ok(out.into())
}

// ---------------------------------------------------------------------------
// calibration
// ---------------------------------------------------------------------------

/// Mean negative log-likelihood of the true classes, in nats per example.
#[pyfunction]
fn nll(probs: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    calibration::nll(&point_dataset(probs, labels)?).map_err(value_error)
}

/// Brier score averaged over classes and examples.
#[pyfunction]
fn brier(probs: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    calibration::brier(&point_dataset(probs, labels)?).map_err(value_error)
}

/// (lower, upper, count, mean_confidence, accuracy) rows of a reliability
/// diagram.
type ReliabilityRows = Vec<(f64, f64, usize, f64, f64)>;

/// (ece, bins) where bins is a list of
/// (lower, upper, count, mean_confidence, accuracy) tuples.
#[pyfunction]
fn reliability(
    probs: Vec<Vec<f64>>,
    labels: Vec<usize>,
    bins: usize,
) -> PyResult<(f64, ReliabilityRows)> {
    let (binning, ece) =
        calibration::reliability(&point_dataset(probs, labels)?, bins).map_err(value_error)?;
    let rows = binning
        .bins
        .iter()
        .map(|b| (b.lower, b.upper, b.count, b.mean_statistic, b.empirical_rate))
        .collect();
    Ok((ece, rows))
}

/// Uncertainty calibration error for per-example statistics in [0, 1].
#[pyfunction]
fn uce(
    probs: Vec<Vec<f64>>,
    labels: Vec<usize>,
    uncertainty: Vec<f64>,
    bins: usize,
) -> PyResult<f64> {
    let (_, value) = calibration::uce(&point_dataset(probs, labels)?, &uncertainty, bins)
        .map_err(value_error)?;
    Ok(value)
}

/// PAvPU and its conditionals as a dict; undefined ratios come back as None.
#[pyfunction]
fn pavpu(
    py: Python<'_>,
    probs: Vec<Vec<f64>>,
    labels: Vec<usize>,
    uncertainty: Vec<f64>,
    threshold: f64,
) -> PyResult<Py<PyDict>> {
    let outcome = calibration::pavpu(&point_dataset(probs, labels)?, &uncertainty, threshold)
        .map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item(
        "counts",
        (outcome.counts.n_ac, outcome.counts.n_au, outcome.counts.n_ic, outcome.counts.n_iu),
    )?;
    out.set_item("p_accurate_given_certain", outcome.p_accurate_given_certain)?;
    out.set_item("p_uncertain_given_inaccurate", outcome.p_uncertain_given_inaccurate)?;
    out.set_item("pavpu", outcome.pavpu)?;
    Ok(out.into())
}

/// Probability integral transform: per-example mixture CDF at the target.
#[pyfunction]
fn pit(mixtures: Vec<Vec<(f64, f64)>>, targets: Vec<f64>) -> PyResult<Vec<f64>> {
    if mixtures.len() != targets.len() {
        return Err(value_error("mixtures and targets must have equal length"));
    }
    mixtures
        .into_iter()
        .zip(targets)
        .map(|(components, y)| {
            regression::mixture_cdf(&mc_regression(components)?, y).map_err(value_error)
        })
        .collect()
}

fn checked_pit_values(values: Vec<f64>) -> PyResult<calibration::PitValues> {
    if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(value_error(format!("PIT value {bad} outside [0,1]")));
    }
    Ok(calibration::PitValues::new(values))
}

/// Regression calibration error of PIT values over S equal-width bins.
#[pyfunction]
fn rce(pit_values: Vec<f64>, bins: usize) -> PyResult<f64> {
    calibration::rce(&checked_pit_values(pit_values)?, bins).map_err(value_error)
}

/// Tail calibration error of PIT values at tail mass tau.
#[pyfunction]
fn tce(pit_values: Vec<f64>, tau: f64) -> PyResult<f64> {
    calibration::tce(&checked_pit_values(pit_values)?, tau).map_err(value_error)
}

// ---------------------------------------------------------------------------
// decisions
// ---------------------------------------------------------------------------

fn loss_matrix(cost: Vec<Vec<f64>>) -> PyResult<LossMatrix> {
    let actions = (0..cost.len()).map(|a| a.to_string()).collect();
    let outcomes = (0..cost.first().map_or(0, Vec::len)).map(|o| o.to_string()).collect();
    LossMatrix::new(actions, outcomes, cost).map_err(value_error)
}

/// Expected cost per action under the predictive distribution.
#[pyfunction]
fn expected_loss(probs: Vec<f64>, cost: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    decision::expected_loss(&distribution(probs)?, &loss_matrix(cost)?).map_err(value_error)
}

/// Index of the cost-optimal action plus the per-action expected losses.
#[pyfunction]
fn optimal_action(probs: Vec<f64>, cost: Vec<Vec<f64>>) -> PyResult<(usize, Vec<f64>)> {
    let decision =
        decision::optimal_action(&distribution(probs)?, &loss_matrix(cost)?).map_err(value_error)?;
    match decision.kind {
        DecisionKind::Predict { action, .. } => Ok((action, decision.expected_losses)),
        DecisionKind::Abstain => unreachable!("optimal_action never abstains"),
    }
}

/// Reject option: (action index or None, error_estimate). Abstains when
/// 1 - max prob exceeds the threshold.
#[pyfunction]
fn reject(probs: Vec<f64>, cost: Vec<Vec<f64>>, threshold: f64) -> PyResult<(Option<usize>, f64)> {
    let decision = decision::reject(&distribution(probs)?, &loss_matrix(cost)?, threshold)
        .map_err(value_error)?;
    let action = match decision.kind {
        DecisionKind::Predict { action, .. } => Some(action),
        DecisionKind::Abstain => None,
    };
    Ok((action, decision.error_estimate))
}

// ---------------------------------------------------------------------------
// fairness
// ---------------------------------------------------------------------------

/// Group rates and fairness gaps for binary predictions with a binary
/// sensitive attribute. Gaps with empty conditioning strata come back None.
#[pyfunction]
fn fairness_audit(
    py: Python<'_>,
    positive_probs: Vec<f64>,
    labels: Vec<usize>,
    groups: Vec<u8>,
    threshold: f64,
) -> PyResult<Py<PyDict>> {
    if positive_probs.len() != labels.len() || labels.len() != groups.len() {
        return Err(value_error("positive_probs, labels, and groups must have equal length"));
    }
    let examples = positive_probs
        .iter()
        .zip(&labels)
        .zip(&groups)
        .enumerate()
        .map(|(i, ((&p1, &label), &group))| {
            Ok(LabeledExample {
                id: i.to_string(),
                group: Some(Group::from_u8(group).map_err(value_error)?),
                label: Label::Class(label),
                prediction: Prediction::Point(distribution(vec![1.0 - p1, p1])?),
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let dataset = Dataset::new(Task::Classification, examples).map_err(value_error)?;
    let rates = fairness::group_rates(&dataset, threshold).map_err(value_error)?;
    let gaps = fairness::disparity(&rates).map_err(value_error)?;
    let out = PyDict::new(py);
    for (name, block) in [("group0", &rates.group0), ("group1", &rates.group1)] {
        let b = block.as_ref().expect("both groups present after group_rates");
        let entry = PyDict::new(py);
        entry.set_item("count", b.count)?;
        entry.set_item("positive_rate", b.positive_rate)?;
        entry.set_item("true_positive_rate", b.true_positive_rate)?;
        entry.set_item("false_positive_rate", b.false_positive_rate)?;
        out.set_item(name, entry)?;
    }
    out.set_item("dp_gap", gaps.dp_gap)?;
    out.set_item("eq_gap", gaps.eq_gap)?;
    out.set_item("eo_gap", gaps.eo_gap)?;
    Ok(out.into())
}

/// Undo the contamination scaling of an observed demographic-parity gap.
#[pyfunction]
fn corrected_dp(observed_gap: f64, rho0: f64, rho1: f64) -> PyResult<f64> {
    let noise = NoiseRates::new(rho0, rho1).map_err(value_error)?;
    fairness::corrected_dp(observed_gap, &noise).map_err(value_error)
}

// ---------------------------------------------------------------------------
// ensemble lab
// ---------------------------------------------------------------------------

/// The gap-in-the-middle sine benchmark: returns (xs, ys).
#[pyfunction]
fn synth_regression(n: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let data = lab::synth_regression(n, seed).map_err(value_error)?;
    let xs = data.inputs().iter().map(|x| x[0]).collect();
    let ys = match data.targets() {
        lab::Targets::Real(ys) => ys.clone(),
        lab::Targets::Class { .. } => unreachable!(),
    };
    Ok((xs, ys))
}

/// A deep ensemble of small regression networks.
#[pyclass]
struct RegressionEnsemble {
    inner: lab::MlpEnsemble,
}

#[pymethods]
impl RegressionEnsemble {
    /// Train on 1-D data. `head` is "homoscedastic" or "heteroscedastic".
    #[staticmethod]
    #[pyo3(signature = (xs, ys, members, seed, epochs=2000, learning_rate=8e-4, head="homoscedastic"))]
    fn train(
        xs: Vec<f64>,
        ys: Vec<f64>,
        members: usize,
        seed: u64,
        epochs: usize,
        learning_rate: f64,
        head: &str,
    ) -> PyResult<Self> {
        let head = match head {
            "homoscedastic" => lab::HeadKind::Homoscedastic,
            "heteroscedastic" => lab::HeadKind::Heteroscedastic,
            other => return Err(value_error(format!("unknown head: {other}"))),
        };
        let inputs = xs.into_iter().map(|x| vec![x]).collect();
        let data =
            lab::LabDataset::new(inputs, lab::Targets::Real(ys)).map_err(value_error)?;
        let config = lab::TrainConfig {
            seed,
            epochs,
            learning_rate,
            ..lab::TrainConfig::default()
        };
        let inner = lab::train_ensemble(&data, members, &config, head).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Per-member (mean, variance) components at x.
    fn predict(&self, x: f64) -> PyResult<Vec<(f64, f64)>> {
        match self.inner.predict(&[x]).map_err(value_error)? {
            lab::McPrediction::Regression(set) => {
                Ok(set.components().iter().map(|c| (c.mean, c.variance)).collect())
            }
            lab::McPrediction::Classification(_) => unreachable!("regression ensemble"),
        }
    }

    #[getter]
    fn num_members(&self) -> usize {
        self.inner.num_members()
    }
}

#[pymodule]
fn _uqkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(predictive_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(predictive_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(variation_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_moments, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(percentile, m)?)?;
    m.add_function(wrap_pyfunction!(distribution_summary, m)?)?;
    m.add_function(wrap_pyfunction!(nll, m)?)?;
    m.add_function(wrap_pyfunction!(brier, m)?)?;
    m.add_function(wrap_pyfunction!(reliability, m)?)?;
    m.add_function(wrap_pyfunction!(uce, m)?)?;
    m.add_function(wrap_pyfunction!(pavpu, m)?)?;
    m.add_function(wrap_pyfunction!(pit, m)?)?;
    m.add_function(wrap_pyfunction!(rce, m)?)?;
    m.add_function(wrap_pyfunction!(tce, m)?)?;
    m.add_function(wrap_pyfunction!(expected_loss, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_action, m)?)?;
    m.add_function(wrap_pyfunction!(reject, m)?)?;
    m.add_function(wrap_pyfunction!(fairness_audit, m)?)?;
    m.add_function(wrap_pyfunction!(corrected_dp, m)?)?;
    m.add_function(wrap_pyfunction!(synth_regression, m)?)?;
    m.add_class::<RegressionEnsemble>()?;
    Ok(())
}
