//! Canonical data model for probabilistic predictions, labels, and groups.
//!
//! Everything downstream (uncertainty metrics, calibration, decisions,
//! fairness audits) consumes a [`Dataset`] of [`LabeledExample`]s. Values are
//! validated on construction; a [`Dataset::validate`] pass re-checks every
//! invariant and reports violations as data rather than errors, so corrupt
//! inputs can be audited instead of aborting at the first bad row.

use serde::Serialize;
use thiserror::Error;

/// Absolute tolerance for the sum-to-one invariant of a probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Probability vectors whose sum misses 1 by at most this much are
/// renormalized (with a warning at the parsing layer); anything worse is a
/// hard error.
pub const PROB_RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("probability vector needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("probability at index {index} out of [0,1]: {value}")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, outside tolerance of 1")]
    BadProbabilitySum { sum: f64 },
    #[error("non-finite probability at index {index}")]
    NonFiniteProbability { index: usize },
    #[error("variance must be >= 0 and finite, got {0}")]
    InvalidVariance(f64),
    #[error("non-finite mean: {0}")]
    NonFiniteMean(f64),
    #[error("sample set must contain at least one sample")]
    EmptySampleSet,
    #[error("samples disagree on class count: expected {expected}, got {got}")]
    MixedClassCounts { expected: usize, got: usize },
    #[error("group must be 0 or 1, got {0}")]
    InvalidGroup(u8),
    #[error("dataset must contain at least one example")]
    EmptyDataset,
    #[error("example {id}: class label {label} out of range for {classes} classes")]
    LabelOutOfRange { id: String, label: usize, classes: usize },
    #[error("example {id}: label kind does not match task")]
    LabelKindMismatch { id: String },
    #[error("example {id}: prediction variant {got} differs from dataset variant {expected}")]
    MixedPredictionVariants { id: String, expected: &'static str, got: &'static str },
    #[error("example {id}: {classes} classes differ from dataset class count {expected}")]
    MixedDatasetClassCounts { id: String, expected: usize, classes: usize },
    #[error("example {id}: prediction variant {variant} invalid for task {task}")]
    VariantTaskMismatch { id: String, variant: &'static str, task: Task },
}

/// Prediction task kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Classification => write!(f, "classification"),
            Task::Regression => write!(f, "regression"),
        }
    }
}

/// Probability vector over K >= 2 classes.
///
/// Entries lie in [0,1] and sum to 1 within [`PROB_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CategoricalDistribution {
    probs: Vec<f64>,
}

impl CategoricalDistribution {
    /// Validate and wrap a probability vector, enforcing the strict
    /// sum-to-one tolerance.
    pub fn new(probs: Vec<f64>) -> Result<Self, DataError> {
        let (dist, renormalized) = Self::check(probs, false)?;
        debug_assert!(!renormalized);
        Ok(dist)
    }

    /// Like [`CategoricalDistribution::new`] but sums off by at most
    /// [`PROB_RENORMALIZE_TOLERANCE`] are renormalized. The flag reports
    /// whether renormalization was applied so callers can warn.
    pub fn new_renormalizing(probs: Vec<f64>) -> Result<(Self, bool), DataError> {
        Self::check(probs, true)
    }

    /// Wrap without validation. Intended for test fixtures and for callers
    /// that re-validate through [`Dataset::validate`].
    pub fn new_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    fn check(mut probs: Vec<f64>, renormalize: bool) -> Result<(Self, bool), DataError> {
        if probs.len() < 2 {
            return Err(DataError::TooFewClasses(probs.len()));
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(DataError::NonFiniteProbability { index });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(DataError::ProbabilityOutOfRange { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        let deviation = (sum - 1.0).abs();
        if deviation <= PROB_SUM_TOLERANCE {
            return Ok((Self { probs }, false));
        }
        if renormalize && deviation <= PROB_RENORMALIZE_TOLERANCE {
            for p in &mut probs {
                *p /= sum;
            }
            return Ok((Self { probs }, true));
        }
        Err(DataError::BadProbabilitySum { sum })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    /// Index of the most probable class; ties broken by lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }

    /// Probability of the most probable class.
    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }
}

/// T class-probability vectors from stochastic forward passes or ensemble
/// members, ordered by sample index.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct McClassificationSet {
    samples: Vec<CategoricalDistribution>,
}

impl McClassificationSet {
    pub fn new(samples: Vec<CategoricalDistribution>) -> Result<Self, DataError> {
        let first = samples.first().ok_or(DataError::EmptySampleSet)?;
        let expected = first.num_classes();
        for sample in &samples {
            if sample.num_classes() != expected {
                return Err(DataError::MixedClassCounts { expected, got: sample.num_classes() });
            }
        }
        Ok(Self { samples })
    }

    pub fn new_unchecked(samples: Vec<CategoricalDistribution>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[CategoricalDistribution] {
        &self.samples
    }

    pub fn num_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn num_classes(&self) -> usize {
        self.samples.first().map_or(0, CategoricalDistribution::num_classes)
    }
}

/// One Gaussian component of a predictive mixture: mean in target units,
/// variance in target units squared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianComponent {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianComponent {
    pub fn new(mean: f64, variance: f64) -> Result<Self, DataError> {
        if !mean.is_finite() {
            return Err(DataError::NonFiniteMean(mean));
        }
        if !variance.is_finite() || variance < 0.0 {
            return Err(DataError::InvalidVariance(variance));
        }
        Ok(Self { mean, variance })
    }

    pub fn new_unchecked(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// T Gaussian components, ordered by sample index. Marginalizing over them
/// with equal weights gives the predictive Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct McRegressionSet {
    components: Vec<GaussianComponent>,
}

impl McRegressionSet {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self, DataError> {
        if components.is_empty() {
            return Err(DataError::EmptySampleSet);
        }
        Ok(Self { components })
    }

    pub fn new_unchecked(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn num_samples(&self) -> usize {
        self.components.len()
    }
}

/// Ground-truth label: a class index for classification, a real target for
/// regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Class(usize),
    Value(f64),
}

impl Label {
    pub fn as_class(&self) -> Option<usize> {
        match self {
            Label::Class(k) => Some(*k),
            Label::Value(_) => None,
        }
    }

    pub fn as_value(&self) -> Option<f64> {
        match self {
            Label::Class(_) => None,
            Label::Value(v) => Some(*v),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Label::Class(k) => serializer.serialize_u64(*k as u64),
            Label::Value(v) => serializer.serialize_f64(*v),
        }
    }
}

/// Binary sensitive attribute A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    A0,
    A1,
}

impl Group {
    pub fn from_u8(value: u8) -> Result<Self, DataError> {
        match value {
            0 => Ok(Group::A0),
            1 => Ok(Group::A1),
            other => Err(DataError::InvalidGroup(other)),
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Group::A0 => 0,
            Group::A1 => 1,
        }
    }

    /// The other group.
    pub fn flipped(&self) -> Self {
        match self {
            Group::A0 => Group::A1,
            Group::A1 => Group::A0,
        }
    }
}

impl Serialize for Group {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.index() as u8)
    }
}

/// A prediction in one of the three supported forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    /// A single categorical distribution (pre-averaged class probabilities).
    Point(CategoricalDistribution),
    /// Raw MC samples of class probabilities.
    McClassification(McClassificationSet),
    /// MC samples of Gaussian (mean, variance) components.
    McRegression(McRegressionSet),
}

impl Prediction {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Prediction::Point(_) => "point",
            Prediction::McClassification(_) => "mc_classification",
            Prediction::McRegression(_) => "mc_regression",
        }
    }

    /// Class count for classification predictions, None for regression.
    pub fn num_classes(&self) -> Option<usize> {
        match self {
            Prediction::Point(dist) => Some(dist.num_classes()),
            Prediction::McClassification(set) => Some(set.num_classes()),
            Prediction::McRegression(_) => None,
        }
    }
}

/// One example: opaque id, label, optional binary group, and a prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledExample {
    pub id: String,
    pub group: Option<Group>,
    pub label: Label,
    pub prediction: Prediction,
}

/// Immutable, validated collection of examples sharing one task and one
/// prediction variant. Safe for concurrent reads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    task: Task,
    examples: Vec<LabeledExample>,
}

impl Dataset {
    pub fn new(task: Task, examples: Vec<LabeledExample>) -> Result<Self, DataError> {
        let dataset = Self { task, examples };
        if let Some(violation) = dataset.validate().into_iter().next() {
            return Err(violation.error);
        }
        Ok(dataset)
    }

    /// Build without validation; pair with [`Dataset::validate`].
    pub fn from_parts_unchecked(task: Task, examples: Vec<LabeledExample>) -> Self {
        Self { task, examples }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Class count shared by all examples (classification only).
    pub fn num_classes(&self) -> Option<usize> {
        self.examples.first().and_then(|e| e.prediction.num_classes())
    }

    /// Re-check every type invariant, returning one report per violation.
    /// An empty list means the dataset is well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.examples.is_empty() {
            violations.push(Violation::dataset(DataError::EmptyDataset));
            return violations;
        }
        let expected_variant = self.examples[0].prediction.variant_name();
        let expected_classes = self.num_classes();
        for example in &self.examples {
            let id = &example.id;
            check_prediction(example, &mut violations);
            match (self.task, &example.prediction) {
                (Task::Classification, Prediction::McRegression(_))
                | (Task::Regression, Prediction::Point(_))
                | (Task::Regression, Prediction::McClassification(_)) => {
                    violations.push(Violation::new(
                        id,
                        DataError::VariantTaskMismatch {
                            id: id.clone(),
                            variant: example.prediction.variant_name(),
                            task: self.task,
                        },
                    ));
                }
                _ => {}
            }
            let variant = example.prediction.variant_name();
            if variant != expected_variant {
                violations.push(Violation::new(
                    id,
                    DataError::MixedPredictionVariants {
                        id: id.clone(),
                        expected: expected_variant,
                        got: variant,
                    },
                ));
            }
            if let (Some(expected), Some(classes)) =
                (expected_classes, example.prediction.num_classes())
            {
                if classes != expected {
                    violations.push(Violation::new(
                        id,
                        DataError::MixedDatasetClassCounts { id: id.clone(), expected, classes },
                    ));
                }
            }
            match (self.task, &example.label) {
                (Task::Classification, Label::Class(label)) => {
                    if let Some(classes) = example.prediction.num_classes() {
                        if *label >= classes {
                            violations.push(Violation::new(
                                id,
                                DataError::LabelOutOfRange {
                                    id: id.clone(),
                                    label: *label,
                                    classes,
                                },
                            ));
                        }
                    }
                }
                (Task::Regression, Label::Value(value)) => {
                    if !value.is_finite() {
                        violations
                            .push(Violation::new(id, DataError::NonFiniteMean(*value)));
                    }
                }
                _ => {
                    violations.push(Violation::new(
                        id,
                        DataError::LabelKindMismatch { id: id.clone() },
                    ));
                }
            }
        }
        violations
    }
}

fn check_prediction(example: &LabeledExample, violations: &mut Vec<Violation>) {
    let id = &example.id;
    match &example.prediction {
        Prediction::Point(dist) => {
            if let Err(error) = CategoricalDistribution::new(dist.probs.clone()) {
                violations.push(Violation::new(id, error));
            }
        }
        Prediction::McClassification(set) => {
            if set.samples.is_empty() {
                violations.push(Violation::new(id, DataError::EmptySampleSet));
            }
            let expected = set.num_classes();
            for sample in set.samples() {
                if let Err(error) = CategoricalDistribution::new(sample.probs.clone()) {
                    violations.push(Violation::new(id, error));
                }
                if sample.num_classes() != expected {
                    violations.push(Violation::new(
                        id,
                        DataError::MixedClassCounts { expected, got: sample.num_classes() },
                    ));
                }
            }
        }
        Prediction::McRegression(set) => {
            if set.components.is_empty() {
                violations.push(Violation::new(id, DataError::EmptySampleSet));
            }
            for component in set.components() {
                if let Err(error) = GaussianComponent::new(component.mean, component.variance) {
                    violations.push(Violation::new(id, error));
                }
            }
        }
    }
}

/// One invariant violation, naming the offending example and the broken rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Id of the offending example, or `<dataset>` for dataset-level rules.
    pub id: String,
    /// The broken invariant.
    pub error: DataError,
}

impl Violation {
    fn new(id: &str, error: DataError) -> Self {
        Self { id: id.to_string(), error }
    }

    fn dataset(error: DataError) -> Self {
        Self { id: "<dataset>".to_string(), error }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "example {}: {}", self.id, self.error)
    }
}
