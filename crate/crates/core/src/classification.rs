//! Classification uncertainty summary statistics: predictive entropy,
//! expected entropy, mutual information, and variation ratio.
//!
//! Entropies are in nats. Predictive entropy of the averaged distribution
//! splits additively into expected entropy (aleatoric) plus mutual
//! information (epistemic); [`entropy_decomposition`] computes all three.

use serde::Serialize;

use crate::dataset::{CategoricalDistribution, McClassificationSet};

/// Guard band for clamping tiny negative mutual information produced by
/// floating-point cancellation.
const MI_GUARD: f64 = 1e-12;

/// Additive split of predictive uncertainty, all in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyDecomposition {
    /// Entropy of the averaged predictive distribution (total uncertainty).
    pub predictive_entropy: f64,
    /// Mean entropy of the individual samples (aleatoric part).
    pub expected_entropy: f64,
    /// Disagreement between samples (epistemic part).
    pub mutual_information: f64,
}

/// Element-wise mean of the T sampled distributions.
pub fn predictive_distribution(mc: &McClassificationSet) -> CategoricalDistribution {
    let t = mc.num_samples() as f64;
    let classes = mc.num_classes();
    let mut mean = vec![0.0; classes];
    for sample in mc.samples() {
        for (acc, &p) in mean.iter_mut().zip(sample.probs()) {
            *acc += p;
        }
    }
    for value in &mut mean {
        *value /= t;
    }
    let (dist, _) = CategoricalDistribution::new_renormalizing(mean)
        .expect("mean of valid distributions is valid");
    dist
}

/// Shannon entropy −Σ p ln p in nats, with 0·ln 0 = 0.
pub fn predictive_entropy(dist: &CategoricalDistribution) -> f64 {
    entropy_of(dist.probs())
}

/// Entropy divided by ln K, giving a statistic in [0, 1].
///
/// Overshoot within 1e-12 of the bounds (floating-point noise at the uniform
/// distribution) is clamped.
pub fn normalized_entropy(dist: &CategoricalDistribution) -> f64 {
    let scaled = predictive_entropy(dist) / (dist.num_classes() as f64).ln();
    scaled.clamp(0.0, 1.0)
}

/// Predictive entropy, expected entropy, and their difference (mutual
/// information) for a set of MC samples.
pub fn entropy_decomposition(mc: &McClassificationSet) -> EntropyDecomposition {
    let predictive_entropy = entropy_of(predictive_distribution(mc).probs());
    let t = mc.num_samples() as f64;
    let expected_entropy =
        mc.samples().iter().map(|s| entropy_of(s.probs())).sum::<f64>() / t;
    let mut mutual_information = predictive_entropy - expected_entropy;
    if mutual_information < 0.0 && mutual_information > -MI_GUARD {
        mutual_information = 0.0;
    }
    EntropyDecomposition { predictive_entropy, expected_entropy, mutual_information }
}

/// Variation ratio 1 − f/T, where f counts the samples whose predicted class
/// equals the modal predicted class. Argmax ties break toward the lowest
/// class index, both per sample and when picking the mode.
pub fn variation_ratio(mc: &McClassificationSet) -> f64 {
    let mut votes = vec![0usize; mc.num_classes()];
    for sample in mc.samples() {
        votes[sample.argmax()] += 1;
    }
    let mut modal = 0;
    for (k, &count) in votes.iter().enumerate().skip(1) {
        if count > votes[modal] {
            modal = k;
        }
    }
    1.0 - votes[modal] as f64 / mc.num_samples() as f64
}

fn entropy_of(probs: &[f64]) -> f64 {
    let mut total = 0.0;
    for &p in probs {
        if p > 0.0 {
            total -= p * p.ln();
        }
    }
    // Exact zero for one-hot vectors; tiny negative sums cannot occur since
    // every term is >= 0.
    total
}
