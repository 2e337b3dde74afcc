//! Synthetic data generators for the ensemble lab.

use crate::lab::rng::{split, CounterRng};
use crate::lab::LabError;

/// Inputs and targets for lab training runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LabDataset {
    inputs: Vec<Vec<f64>>,
    targets: Targets,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Real(Vec<f64>),
    Class { labels: Vec<usize>, classes: usize },
}

impl LabDataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Targets) -> Result<Self, LabError> {
        let n = match &targets {
            Targets::Real(ys) => ys.len(),
            Targets::Class { labels, .. } => labels.len(),
        };
        if inputs.is_empty() || inputs.len() != n {
            return Err(LabError::InvalidData {
                detail: format!("{} inputs vs {} targets", inputs.len(), n),
            });
        }
        let dim = inputs[0].len();
        if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
            return Err(LabError::InvalidData { detail: "ragged or empty inputs".to_string() });
        }
        if let Targets::Class { labels, classes } = &targets {
            if labels.iter().any(|&l| l >= *classes) {
                return Err(LabError::InvalidData { detail: "label out of range".to_string() });
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }
}

/// 1-D regression data with a hole in the middle of the input range:
/// x uniform on [-1, -0.2] u [0.2, 1], y = sin(2 pi x) + eps with
/// eps ~ Normal(0, 0.01). The gap (-0.2, 0.2) contains no data, so a model's
/// epistemic uncertainty should inflate there.
pub fn synth_regression(n: usize, seed: u64) -> Result<LabDataset, LabError> {
    if n < 2 {
        return Err(LabError::InvalidData { detail: format!("need n >= 2, got {n}") });
    }
    let mut rng = CounterRng::new(split(seed, 0x5245_4752)); // stream tag "REGR"
    let mut inputs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.uniform();
        let x = if u < 0.5 {
            -1.0 + (u / 0.5) * 0.8
        } else {
            0.2 + ((u - 0.5) / 0.5) * 0.8
        };
        let noise = 0.1 * rng.standard_normal();
        inputs.push(vec![x]);
        ys.push((2.0 * std::f64::consts::PI * x).sin() + noise);
    }
    LabDataset::new(inputs, Targets::Real(ys))
}

/// 2-D classification data: one isotropic Gaussian blob per class
/// (variance 0.05), means spaced evenly on the unit circle, classes balanced
/// (any remainder of n/K goes to the lowest class indices).
pub fn synth_classification(n: usize, classes: usize, seed: u64) -> Result<LabDataset, LabError> {
    if classes < 2 || n < classes {
        return Err(LabError::InvalidData {
            detail: format!("need n >= K >= 2, got n={n}, K={classes}"),
        });
    }
    let mut rng = CounterRng::new(split(seed, 0x434C_4153)); // stream tag "CLAS"
    let sd = 0.05f64.sqrt();
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for class in 0..classes {
        let count = n / classes + usize::from(class < n % classes);
        let angle = 2.0 * std::f64::consts::PI * class as f64 / classes as f64;
        let (cx, cy) = (angle.cos(), angle.sin());
        for _ in 0..count {
            inputs.push(vec![cx + sd * rng.standard_normal(), cy + sd * rng.standard_normal()]);
            labels.push(class);
        }
    }
    LabDataset::new(inputs, Targets::Class { labels, classes })
}

/// Blob center of class `class` out of `classes`, for oracle classifiers in
/// tests.
pub fn blob_center(class: usize, classes: usize) -> (f64, f64) {
    let angle = 2.0 * std::f64::consts::PI * class as f64 / classes as f64;
    (angle.cos(), angle.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_inputs_avoid_the_gap() {
        let data = synth_regression(200, 3).unwrap();
        assert_eq!(data.len(), 200);
        assert!(data.inputs().iter().all(|x| x[0].abs() >= 0.2 && x[0].abs() <= 1.0));
    }

    #[test]
    fn regression_is_deterministic() {
        assert_eq!(synth_regression(50, 9).unwrap(), synth_regression(50, 9).unwrap());
        assert_ne!(synth_regression(50, 9).unwrap(), synth_regression(50, 10).unwrap());
    }

    #[test]
    fn regression_noise_variance_matches_the_generator() {
        // Residuals about sin(2 pi x) must have variance close to 0.01.
        let data = synth_regression(10_000, 123).unwrap();
        let ys = match data.targets() {
            Targets::Real(ys) => ys,
            _ => unreachable!(),
        };
        let residuals: Vec<f64> = data
            .inputs()
            .iter()
            .zip(ys)
            .map(|(x, y)| y - (2.0 * std::f64::consts::PI * x[0]).sin())
            .collect();
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let var =
            residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / residuals.len() as f64;
        assert!((0.008..=0.012).contains(&var), "residual variance {var}");
    }

    #[test]
    fn classification_is_balanced() {
        let data = synth_classification(300, 3, 5).unwrap();
        let labels = match data.targets() {
            Targets::Class { labels, .. } => labels,
            _ => unreachable!(),
        };
        for class in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == class).count(), 100);
        }
    }

    #[test]
    fn classification_is_deterministic() {
        assert_eq!(
            synth_classification(90, 3, 4).unwrap(),
            synth_classification(90, 3, 4).unwrap()
        );
    }

    #[test]
    fn blobs_are_separable_by_the_nearest_center_oracle() {
        // The closed-form oracle for equal isotropic Gaussians is the
        // nearest-mean classifier; at these separations it must clear 95%.
        let data = synth_classification(3000, 3, 77).unwrap();
        let labels = match data.targets() {
            Targets::Class { labels, .. } => labels,
            _ => unreachable!(),
        };
        let mut correct = 0;
        for (x, &label) in data.inputs().iter().zip(labels) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for class in 0..3 {
                let (cx, cy) = blob_center(class, 3);
                let d = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
                if d < best_d {
                    best_d = d;
                    best = class;
                }
            }
            correct += usize::from(best == label);
        }
        let accuracy = correct as f64 / data.len() as f64;
        assert!(accuracy > 0.95, "oracle accuracy {accuracy}");
    }
}
