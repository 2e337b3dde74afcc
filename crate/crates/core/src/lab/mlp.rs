//! Small feed-forward networks trained by full-batch gradient descent on the
//! mean negative log-likelihood.
//!
//! Architecture is fixed at input -> h1 -> h2 -> head with tanh hidden
//! activations and a linear head. Three heads are supported: a single mean
//! output under a fixed homoscedastic noise variance, a (mean, log variance)
//! pair for heteroscedastic noise, and K logits through a softmax for
//! classification.
//!
//! Everything is deterministic: weights initialize from the config seed via
//! the counter-based generator, and training is plain sequential full-batch
//! descent, so the same data and seed reproduce bit-identical parameters.

use serde::{Deserialize, Serialize};

use crate::dataset::{CategoricalDistribution, GaussianComponent};
use crate::lab::rng::CounterRng;
use crate::lab::synth::{LabDataset, Targets};
use crate::lab::LabError;

const LN_2PI: f64 = 1.8378770664093453;

/// Head choice for [`train_mlp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Homoscedastic,
    Heteroscedastic,
    Softmax,
}

/// Concrete head of a trained network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// One mean output; aleatoric variance is the fixed `sigma2`.
    Homoscedastic { sigma2: f64 },
    /// Two outputs: predicted mean and log predicted variance.
    Heteroscedastic,
    /// `classes` logits fed through a softmax.
    Softmax { classes: usize },
}

impl Head {
    pub fn kind(&self) -> HeadKind {
        match self {
            Head::Homoscedastic { .. } => HeadKind::Homoscedastic,
            Head::Heteroscedastic => HeadKind::Heteroscedastic,
            Head::Softmax { .. } => HeadKind::Softmax,
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            Head::Homoscedastic { .. } => 1,
            Head::Heteroscedastic => 2,
            Head::Softmax { classes } => *classes,
        }
    }
}

/// Training hyperparameters.
///
/// The defaults are tuned for the in-repo regression demo (200 points of
/// noisy sine data, noise variance 0.01): under that noise level the
/// homoscedastic likelihood scales gradients by 1/sigma2 = 100, so the
/// step size is kept small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_widths: (usize, usize),
    pub learning_rate: f64,
    /// Heavy-ball momentum factor in [0, 1); 0 recovers plain descent.
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Fixed noise variance used by the homoscedastic head, in target
    /// units squared.
    pub homoscedastic_sigma2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_widths: (50, 50),
            learning_rate: 8e-4,
            momentum: 0.9,
            epochs: 2000,
            seed: 0,
            homoscedastic_sigma2: 0.01,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), LabError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.hidden_widths.0 == 0
            || self.hidden_widths.1 == 0
            || !positive(self.learning_rate)
            || !(0.0..1.0).contains(&self.momentum)
            || self.epochs == 0
            || !positive(self.homoscedastic_sigma2)
        {
            return Err(LabError::InvalidConfig);
        }
        Ok(())
    }
}

/// One dense layer, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    /// Uniform Glorot initialization on [-r, r] with
    /// r = sqrt(6 / (fan_in + fan_out)); biases start at zero.
    fn init(in_dim: usize, out_dim: usize, rng: &mut CounterRng) -> Self {
        let r = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim).map(|_| rng.uniform_in(-r, r)).collect();
        Self { in_dim, out_dim, weights, bias: vec![0.0; out_dim] }
    }

    fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        let rows = self.weights.chunks_exact(self.in_dim);
        for ((slot, row), bias) in out.iter_mut().zip(rows).zip(&self.bias) {
            let mut acc = *bias;
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            *slot = acc;
        }
    }
}

/// Trained network parameters: three dense layers plus the head description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParameters {
    pub input_dim: usize,
    pub head: Head,
    pub seed: u64,
    pub layers: Vec<DenseLayer>,
}

impl MlpParameters {
    fn init(input_dim: usize, hidden: (usize, usize), head: Head, seed: u64) -> Self {
        let mut rng = CounterRng::new(seed);
        let layers = vec![
            DenseLayer::init(input_dim, hidden.0, &mut rng),
            DenseLayer::init(hidden.0, hidden.1, &mut rng),
            DenseLayer::init(hidden.1, head.output_dim(), &mut rng),
        ];
        Self { input_dim, head, seed, layers }
    }

    /// Raw head outputs (mean / (mean, log variance) / logits).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, LabError> {
        self.forward_masked(x, None)
    }

    fn forward_masked(&self, x: &[f64], dropout: Option<(&mut CounterRng, f64)>) -> Result<Vec<f64>, LabError> {
        if x.len() != self.input_dim {
            return Err(LabError::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let mut a1 = vec![0.0; self.layers[0].out_dim];
        let mut a2 = vec![0.0; self.layers[1].out_dim];
        let mut out = vec![0.0; self.layers[2].out_dim];
        match dropout {
            None => {
                self.layers[0].forward_into(x, &mut a1);
                a1.iter_mut().for_each(|v| *v = v.tanh());
                self.layers[1].forward_into(&a1, &mut a2);
                a2.iter_mut().for_each(|v| *v = v.tanh());
            }
            Some((rng, rate)) => {
                let keep_scale = 1.0 / (1.0 - rate);
                self.layers[0].forward_into(x, &mut a1);
                for v in &mut a1 {
                    *v = if rng.uniform() < rate { 0.0 } else { v.tanh() * keep_scale };
                }
                self.layers[1].forward_into(&a1, &mut a2);
                for v in &mut a2 {
                    *v = if rng.uniform() < rate { 0.0 } else { v.tanh() * keep_scale };
                }
            }
        }
        self.layers[2].forward_into(&a2, &mut out);
        Ok(out)
    }

    /// Predictive Gaussian component for the regression heads.
    pub fn predict_component(&self, x: &[f64]) -> Result<GaussianComponent, LabError> {
        let out = self.forward(x)?;
        self.component_from_output(&out)
    }

    /// Predictive class distribution for the softmax head.
    pub fn predict_distribution(&self, x: &[f64]) -> Result<CategoricalDistribution, LabError> {
        let out = self.forward(x)?;
        self.distribution_from_output(&out)
    }

    fn component_from_output(&self, out: &[f64]) -> Result<GaussianComponent, LabError> {
        match self.head {
            Head::Homoscedastic { sigma2 } => Ok(GaussianComponent::new_unchecked(out[0], sigma2)),
            Head::Heteroscedastic => {
                let variance = out[1].clamp(-700.0, 700.0).exp();
                Ok(GaussianComponent::new_unchecked(out[0], variance))
            }
            Head::Softmax { .. } => Err(LabError::HeadMismatch {
                expected: "regression head",
                got: "softmax",
            }),
        }
    }

    fn distribution_from_output(&self, out: &[f64]) -> Result<CategoricalDistribution, LabError> {
        match self.head {
            Head::Softmax { .. } => Ok(softmax(out)),
            _ => Err(LabError::HeadMismatch {
                expected: "softmax head",
                got: "regression head",
            }),
        }
    }

    /// Number of scalar parameters across all layers.
    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Read one parameter by flat index (layer by layer, weights row-major,
    /// then bias).
    pub fn parameter(&self, index: usize) -> f64 {
        let (layer, offset) = self.locate(index);
        let l = &self.layers[layer];
        if offset < l.weights.len() {
            l.weights[offset]
        } else {
            l.bias[offset - l.weights.len()]
        }
    }

    /// Overwrite one parameter by flat index.
    pub fn set_parameter(&mut self, index: usize, value: f64) {
        let (layer, offset) = self.locate(index);
        let l = &mut self.layers[layer];
        if offset < l.weights.len() {
            l.weights[offset] = value;
        } else {
            let i = offset - l.weights.len();
            l.bias[i] = value;
        }
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (i, l) in self.layers.iter().enumerate() {
            let size = l.weights.len() + l.bias.len();
            if index < size {
                return (i, index);
            }
            index -= size;
        }
        panic!("parameter index out of range");
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> CategoricalDistribution {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let (dist, _) = CategoricalDistribution::new_renormalizing(
        exps.into_iter().map(|e| e / sum).collect(),
    )
    .expect("softmax output is a valid distribution");
    dist
}

/// Mean negative log-likelihood of the data under the network.
pub fn mean_nll(params: &MlpParameters, data: &LabDataset) -> Result<f64, LabError> {
    check_head_data(params, data)?;
    let mut total = 0.0;
    for (i, x) in data.inputs().iter().enumerate() {
        let out = params.forward(x)?;
        total += example_nll(params, data, i, &out);
    }
    Ok(total / data.len() as f64)
}

/// Gradient of [`mean_nll`] with respect to every parameter, flattened in
/// the same order as [`MlpParameters::parameter`].
pub fn mean_nll_gradient(params: &MlpParameters, data: &LabDataset) -> Result<Vec<f64>, LabError> {
    check_head_data(params, data)?;
    let mut grads = Gradients::zeros(params);
    let mut scratch = Scratch::new(params);
    for i in 0..data.len() {
        accumulate_example(params, data, i, TrainPhase::Full, &mut grads, &mut scratch)?;
    }
    grads.scale(1.0 / data.len() as f64);
    Ok(grads.flatten())
}

/// Train a network with full-batch gradient descent (heavy-ball momentum)
/// on the mean NLL.
///
/// Homoscedastic Gaussian NLL reduces to squared error scaled by
/// 1/(2 sigma2); the softmax head trains on cross-entropy. The
/// heteroscedastic head warm-starts: for the first three quarters of the
/// epochs
/// the mean path trains under the fixed homoscedastic noise variance with
/// the variance path frozen, the variance bias is then moment-matched to
/// the warmed-up residuals, and both heads finish jointly on the
/// heteroscedastic likelihood. Joint training from scratch collapses into
/// the inflate-the-variance local optimum instead of fitting the mean.
/// Deterministic given the data and `config.seed`.
pub fn train_mlp(
    data: &LabDataset,
    config: &TrainConfig,
    head: HeadKind,
) -> Result<MlpParameters, LabError> {
    config.validate()?;
    let head = resolve_head(head, data, config)?;
    let mut params = MlpParameters::init(data.input_dim(), config.hidden_widths, head, config.seed);
    let mut grads = Gradients::zeros(&params);
    let mut velocity = Gradients::zeros(&params);
    let mut scratch = Scratch::new(&params);
    let n = data.len() as f64;
    let warmup_epochs = match head {
        Head::Heteroscedastic => config.epochs * 3 / 4,
        _ => 0,
    };
    for epoch in 0..config.epochs {
        if epoch == warmup_epochs && warmup_epochs > 0 {
            seed_variance_bias(&mut params, data)?;
            // Reset the mean-path momentum accumulated under the warmup
            // objective before switching likelihoods.
            velocity.zero();
        }
        grads.zero();
        let mut loss = 0.0;
        let phase = if epoch < warmup_epochs {
            TrainPhase::MeanWarmup { sigma2: config.homoscedastic_sigma2 }
        } else {
            TrainPhase::Full
        };
        for i in 0..data.len() {
            loss += accumulate_example(&params, data, i, phase, &mut grads, &mut scratch)?;
        }
        loss /= n;
        // The heteroscedastic head can blow up its mean path while the
        // inflating variance keeps the loss finite, so check the weights
        // too.
        if !loss.is_finite() {
            return Err(LabError::DivergedTraining { epoch });
        }
        grads.scale(1.0 / n);
        velocity.blend(config.momentum, &grads);
        // The joint heteroscedastic phase runs at half step: the learned
        // precision rescales the mean-path curvature upward once the
        // variance approaches the noise floor.
        let rate = if warmup_epochs > 0 && epoch >= warmup_epochs {
            0.5 * config.learning_rate
        } else {
            config.learning_rate
        };
        let mut weight_probe = 0.0;
        for (layer, (vw, vb)) in params.layers.iter_mut().zip(velocity.per_layer()) {
            for (w, v) in layer.weights.iter_mut().zip(vw) {
                *w -= rate * v;
                weight_probe += *w * *w;
            }
            for (b, v) in layer.bias.iter_mut().zip(vb) {
                *b -= rate * v;
            }
        }
        if !weight_probe.is_finite() || weight_probe > 1e12 {
            return Err(LabError::DivergedTraining { epoch });
        }
    }
    // Post-training sanity: the final loss must be finite.
    let final_loss = mean_nll(&params, data)?;
    if !final_loss.is_finite() {
        return Err(LabError::DivergedTraining { epoch: config.epochs });
    }
    Ok(params)
}

fn resolve_head(kind: HeadKind, data: &LabDataset, config: &TrainConfig) -> Result<Head, LabError> {
    match (kind, data.targets()) {
        (HeadKind::Homoscedastic, Targets::Real(_)) => {
            Ok(Head::Homoscedastic { sigma2: config.homoscedastic_sigma2 })
        }
        (HeadKind::Heteroscedastic, Targets::Real(_)) => Ok(Head::Heteroscedastic),
        (HeadKind::Softmax, Targets::Class { classes, .. }) => {
            Ok(Head::Softmax { classes: *classes })
        }
        (kind, _) => Err(LabError::HeadMismatch {
            expected: "targets matching the head",
            got: match kind {
                HeadKind::Softmax => "real targets with a softmax head",
                _ => "class targets with a regression head",
            },
        }),
    }
}

fn check_head_data(params: &MlpParameters, data: &LabDataset) -> Result<(), LabError> {
    match (params.head, data.targets()) {
        (Head::Homoscedastic { .. }, Targets::Real(_))
        | (Head::Heteroscedastic, Targets::Real(_)) => Ok(()),
        (Head::Softmax { classes }, Targets::Class { classes: got, .. }) if classes == *got => {
            Ok(())
        }
        _ => Err(LabError::HeadMismatch { expected: "targets matching the head", got: "mismatch" }),
    }
}

/// Per-example NLL given precomputed head outputs.
fn example_nll(params: &MlpParameters, data: &LabDataset, i: usize, out: &[f64]) -> f64 {
    match (params.head, data.targets()) {
        (Head::Homoscedastic { sigma2 }, Targets::Real(ys)) => {
            let r = out[0] - ys[i];
            0.5 * (LN_2PI + sigma2.ln()) + r * r / (2.0 * sigma2)
        }
        (Head::Heteroscedastic, Targets::Real(ys)) => {
            let (mu, s) = (out[0], out[1]);
            let r = ys[i] - mu;
            0.5 * (LN_2PI + s + r * r * (-s).exp())
        }
        (Head::Softmax { .. }, Targets::Class { labels, .. }) => {
            let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_sum: f64 = out.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
            log_sum - out[labels[i]]
        }
        _ => unreachable!("head/data agreement checked on entry"),
    }
}

/// Training phase: the heteroscedastic warmup fits the mean under a fixed
/// noise variance with the variance path frozen.
#[derive(Clone, Copy)]
enum TrainPhase {
    MeanWarmup { sigma2: f64 },
    Full,
}

/// Moment-match the variance head at the warmup-to-joint transition: zero
/// the variance output row and set its bias to the log mean squared residual
/// of the warmed-up mean, so joint training starts from a flat, calibrated
/// variance instead of descending from sigma2 = 1 with random input
/// dependence.
fn seed_variance_bias(params: &mut MlpParameters, data: &LabDataset) -> Result<(), LabError> {
    let ys = match data.targets() {
        Targets::Real(ys) => ys,
        Targets::Class { .. } => return Ok(()),
    };
    let mut msr = 0.0;
    for (x, &y) in data.inputs().iter().zip(ys) {
        let out = params.forward(x)?;
        msr += (out[0] - y) * (out[0] - y);
    }
    msr = (msr / data.len() as f64).max(1e-8);
    let head_layer = &mut params.layers[2];
    let in_dim = head_layer.in_dim;
    head_layer.weights[in_dim..2 * in_dim].iter_mut().for_each(|w| *w = 0.0);
    head_layer.bias[1] = msr.ln();
    Ok(())
}

/// Head-output gradient dNLL/dout for one example, written into `dout`.
fn head_delta(
    params: &MlpParameters,
    data: &LabDataset,
    i: usize,
    phase: TrainPhase,
    out: &[f64],
    dout: &mut [f64],
) {
    match (params.head, data.targets()) {
        (Head::Homoscedastic { sigma2 }, Targets::Real(ys)) => {
            dout[0] = (out[0] - ys[i]) / sigma2;
        }
        (Head::Heteroscedastic, Targets::Real(ys)) => match phase {
            TrainPhase::MeanWarmup { sigma2 } => {
                dout[0] = (out[0] - ys[i]) / sigma2;
                dout[1] = 0.0;
            }
            TrainPhase::Full => {
                let (mu, s) = (out[0], out[1]);
                let r = ys[i] - mu;
                let precision = (-s).exp();
                dout[0] = -r * precision;
                dout[1] = 0.5 * (1.0 - r * r * precision);
            }
        },
        (Head::Softmax { .. }, Targets::Class { labels, .. }) => {
            let dist = softmax(out);
            dout.copy_from_slice(dist.probs());
            dout[labels[i]] -= 1.0;
        }
        _ => unreachable!("head/data agreement checked on entry"),
    }
}

struct Scratch {
    a1: Vec<f64>,
    a2: Vec<f64>,
    out: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    dout: Vec<f64>,
}

impl Scratch {
    fn new(params: &MlpParameters) -> Self {
        Self {
            a1: vec![0.0; params.layers[0].out_dim],
            a2: vec![0.0; params.layers[1].out_dim],
            out: vec![0.0; params.layers[2].out_dim],
            d1: vec![0.0; params.layers[0].out_dim],
            d2: vec![0.0; params.layers[1].out_dim],
            dout: vec![0.0; params.layers[2].out_dim],
        }
    }
}

struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros(params: &MlpParameters) -> Self {
        Self {
            weights: params.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: params.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn zero(&mut self) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    fn scale(&mut self, factor: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Heavy-ball update: self = beta * self + other.
    fn blend(&mut self, beta: f64, other: &Gradients) {
        for (v, g) in self
            .weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .zip(other.weights.iter().chain(other.biases.iter()))
        {
            for (vi, &gi) in v.iter_mut().zip(g) {
                *vi = beta * *vi + gi;
            }
        }
    }

    fn per_layer(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.weights.iter().map(Vec::as_slice).zip(self.biases.iter().map(Vec::as_slice))
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Forward + backward for one example; returns its NLL and accumulates
/// parameter gradients (unnormalized; caller divides by N).
fn accumulate_example(
    params: &MlpParameters,
    data: &LabDataset,
    i: usize,
    phase: TrainPhase,
    grads: &mut Gradients,
    s: &mut Scratch,
) -> Result<f64, LabError> {
    let x = &data.inputs()[i];
    if x.len() != params.input_dim {
        return Err(LabError::DimensionMismatch { expected: params.input_dim, got: x.len() });
    }
    let (l1, l2, l3) = (&params.layers[0], &params.layers[1], &params.layers[2]);
    l1.forward_into(x, &mut s.a1);
    s.a1.iter_mut().for_each(|v| *v = v.tanh());
    l2.forward_into(&s.a1, &mut s.a2);
    s.a2.iter_mut().for_each(|v| *v = v.tanh());
    l3.forward_into(&s.a2, &mut s.out);

    let loss = example_nll(params, data, i, &s.out);
    head_delta(params, data, i, phase, &s.out, &mut s.dout);

    // Output layer gradients and the delta flowing into a2.
    s.d2.iter_mut().for_each(|v| *v = 0.0);
    backprop_layer(l3, &s.dout, &s.a2, &mut s.d2, &mut grads.weights[2], &mut grads.biases[2]);
    // Through the tanh of layer 2.
    for (d, &a) in s.d2.iter_mut().zip(&s.a2) {
        *d *= 1.0 - a * a;
    }

    s.d1.iter_mut().for_each(|v| *v = 0.0);
    backprop_layer(l2, &s.d2, &s.a1, &mut s.d1, &mut grads.weights[1], &mut grads.biases[1]);
    for (d, &a) in s.d1.iter_mut().zip(&s.a1) {
        *d *= 1.0 - a * a;
    }

    for ((grow, gb), &delta) in grads.weights[0]
        .chunks_exact_mut(l1.in_dim)
        .zip(grads.biases[0].iter_mut())
        .zip(&s.d1)
    {
        for (g, &xi) in grow.iter_mut().zip(x) {
            *g += delta * xi;
        }
        *gb += delta;
    }

    Ok(loss)
}

/// Accumulate weight/bias gradients of one layer and the delta flowing into
/// its inputs: gw += delta (x) a_prev, d_prev += W^T delta.
fn backprop_layer(
    layer: &DenseLayer,
    delta_out: &[f64],
    a_prev: &[f64],
    d_prev: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
) {
    let rows = layer.weights.chunks_exact(layer.in_dim);
    let grows = gw.chunks_exact_mut(layer.in_dim);
    for (((&delta, row), grow), gbo) in
        delta_out.iter().zip(rows).zip(grows).zip(gb.iter_mut())
    {
        for ((g, &a), (&w, d)) in
            grow.iter_mut().zip(a_prev).zip(row.iter().zip(d_prev.iter_mut()))
        {
            *g += delta * a;
            *d += delta * w;
        }
        *gbo += delta;
    }
}

/// T stochastic forward passes with multiplicative Bernoulli(1-rate) masks
/// on the hidden units, activations scaled by 1/(1-rate). Sample t draws its
/// masks from an independent stream derived from (seed, t), so the set is
/// reproducible and order-independent.
pub fn mc_dropout_forward(
    params: &MlpParameters,
    x: &[f64],
    samples: usize,
    rate: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, LabError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(LabError::InvalidDropoutRate(rate));
    }
    if samples == 0 {
        return Err(LabError::InvalidConfig);
    }
    (0..samples)
        .map(|t| {
            let mut rng = CounterRng::new(crate::lab::rng::split(seed, t as u64));
            params.forward_masked(x, Some((&mut rng, rate)))
        })
        .collect()
}
