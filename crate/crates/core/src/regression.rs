//! Regression predictive-distribution summaries: Gaussian-mixture moments
//! with the aleatoric/epistemic variance split, the mixture CDF, and
//! percentile-based summaries (central intervals, quartiles, box-plot
//! whiskers).

use serde::Serialize;
use thiserror::Error;

use crate::dataset::McRegressionSet;

/// Guard band for clamping a tiny negative epistemic variance produced by
/// floating-point cancellation.
const VARIANCE_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("component {index} has zero variance; the mixture CDF is degenerate")]
    DegenerateComponent { index: usize },
    #[error("percentile level must lie strictly inside (0,1), got {0}")]
    LevelOutOfRange(f64),
    #[error("coverage must lie strictly inside (0,1), got {0}")]
    CoverageOutOfRange(f64),
}

/// Mean and variance of the predictive Gaussian mixture, with the variance
/// split into its aleatoric and epistemic parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceDecomposition {
    pub mean: f64,
    /// Mean of the per-sample noise variances.
    pub aleatoric_variance: f64,
    /// Variance of the per-sample means.
    pub epistemic_variance: f64,
    /// Sum of the two parts: the variance of the mixture.
    pub total_variance: f64,
}

/// Percentiles, a central interval, quartiles, and box-plot whiskers of the
/// predictive mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    /// Requested (level, value) pairs, sorted by level.
    pub percentiles: Vec<(f64, f64)>,
    /// Central interval (lower, upper) holding `coverage` probability mass.
    pub interval: Interval,
    /// First quartile, median, third quartile.
    pub quartiles: (f64, f64, f64),
    /// Q1 − 1.5·IQR and Q3 + 1.5·IQR.
    pub whiskers: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub coverage: f64,
}

/// Monte-Carlo estimators of the mixture moments: mean of means, mean of
/// variances (aleatoric), variance of means (epistemic).
pub fn mixture_moments(mc: &McRegressionSet) -> VarianceDecomposition {
    let t = mc.num_samples() as f64;
    let mean = mc.components().iter().map(|c| c.mean).sum::<f64>() / t;
    let aleatoric_variance = mc.components().iter().map(|c| c.variance).sum::<f64>() / t;
    // Two-pass form of (1/T)Σμ² − ((1/T)Σμ)²; algebraically identical,
    // immune to cancellation.
    let mut epistemic_variance =
        mc.components().iter().map(|c| (c.mean - mean).powi(2)).sum::<f64>() / t;
    if epistemic_variance < 0.0 && epistemic_variance > -VARIANCE_GUARD {
        epistemic_variance = 0.0;
    }
    VarianceDecomposition {
        mean,
        aleatoric_variance,
        epistemic_variance,
        total_variance: aleatoric_variance + epistemic_variance,
    }
}

/// CDF of the equally-weighted Gaussian mixture at `y`.
pub fn mixture_cdf(mc: &McRegressionSet, y: f64) -> Result<f64, RegressionError> {
    check_positive_variances(mc)?;
    let t = mc.num_samples() as f64;
    let total: f64 = mc
        .components()
        .iter()
        .map(|c| standard_normal_cdf((y - c.mean) / c.variance.sqrt()))
        .sum();
    Ok(total / t)
}

/// Value below which the mixture holds `level` probability mass, found by
/// bisection on the mixture CDF.
pub fn percentile(mc: &McRegressionSet, level: f64) -> Result<f64, RegressionError> {
    if !(0.0 < level && level < 1.0) {
        return Err(RegressionError::LevelOutOfRange(level));
    }
    check_positive_variances(mc)?;
    let max_sd = mc.components().iter().map(|c| c.variance.sqrt()).fold(0.0, f64::max);
    let min_mean = mc.components().iter().map(|c| c.mean).fold(f64::INFINITY, f64::min);
    let max_mean = mc.components().iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max);
    let mut margin = 10.0 * max_sd;
    let mut lo = min_mean - margin;
    let mut hi = max_mean + margin;
    // The 10-sigma bracket covers every practical level; widen for the
    // extreme tails representable in f64.
    for _ in 0..8 {
        if cdf_unchecked(mc, lo) < level && cdf_unchecked(mc, hi) > level {
            break;
        }
        margin *= 2.0;
        lo = min_mean - margin;
        hi = max_mean + margin;
    }
    // Bisect until the interval stops shrinking in f64, which is well inside
    // the 1e-9-of-bracket-width target.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf_unchecked(mc, mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Percentiles at the requested levels plus the central `coverage` interval,
/// quartiles, and 1.5-IQR whiskers.
pub fn distribution_summary(
    mc: &McRegressionSet,
    percentile_levels: &[f64],
    coverage: f64,
) -> Result<DistributionSummary, RegressionError> {
    if !(0.0 < coverage && coverage < 1.0) {
        return Err(RegressionError::CoverageOutOfRange(coverage));
    }
    let mut levels = percentile_levels.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).expect("levels must not be NaN"));
    let percentiles = levels
        .into_iter()
        .map(|level| percentile(mc, level).map(|value| (level, value)))
        .collect::<Result<Vec<_>, _>>()?;
    let tail = 0.5 * (1.0 - coverage);
    let interval = Interval {
        lower: percentile(mc, tail)?,
        upper: percentile(mc, 1.0 - tail)?,
        coverage,
    };
    let q1 = percentile(mc, 0.25)?;
    let median = percentile(mc, 0.5)?;
    let q3 = percentile(mc, 0.75)?;
    let iqr = q3 - q1;
    Ok(DistributionSummary {
        percentiles,
        interval,
        quartiles: (q1, median, q3),
        whiskers: (q1 - 1.5 * iqr, q3 + 1.5 * iqr),
    })
}

/// Standard normal CDF via the complementary error function, keeping full
/// relative accuracy in the lower tail.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn check_positive_variances(mc: &McRegressionSet) -> Result<(), RegressionError> {
    for (index, component) in mc.components().iter().enumerate() {
        if component.variance <= 0.0 {
            return Err(RegressionError::DegenerateComponent { index });
        }
    }
    Ok(())
}

fn cdf_unchecked(mc: &McRegressionSet, y: f64) -> f64 {
    let t = mc.num_samples() as f64;
    mc.components()
        .iter()
        .map(|c| standard_normal_cdf((y - c.mean) / c.variance.sqrt()))
        .sum::<f64>()
        / t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GaussianComponent;
    use proptest::prelude::*;

    fn set(components: &[(f64, f64)]) -> McRegressionSet {
        McRegressionSet::new(
            components.iter().map(|&(m, v)| GaussianComponent::new(m, v).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_component_moments() {
        let d = mixture_moments(&set(&[(3.0, 0.25)]));
        assert_eq!(d.mean, 3.0);
        assert_eq!(d.aleatoric_variance, 0.25);
        assert_eq!(d.epistemic_variance, 0.0);
        assert_eq!(d.total_variance, 0.25);
    }

    #[test]
    fn identical_means_have_no_epistemic_variance() {
        let d = mixture_moments(&set(&[(1.0, 0.5), (1.0, 0.5)]));
        assert_eq!(d.epistemic_variance, 0.0);
        assert_eq!(d.aleatoric_variance, 0.5);
    }

    #[test]
    fn two_component_closed_form() {
        // Means 0 and 2, both variance 1: mixture mean 1, epistemic 1,
        // aleatoric 1, total 2.
        let d = mixture_moments(&set(&[(0.0, 1.0), (2.0, 1.0)]));
        assert_eq!(d.mean, 1.0);
        assert_eq!(d.aleatoric_variance, 1.0);
        assert_eq!(d.epistemic_variance, 1.0);
        assert_eq!(d.total_variance, 2.0);
    }

    #[test]
    fn standard_normal_median() {
        let c = mixture_cdf(&set(&[(0.0, 1.0)]), 0.0).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cdf_left_limit_is_zero() {
        let c = mixture_cdf(&set(&[(0.0, 1.0)]), -500.0).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn symmetric_two_component_cdf_at_center() {
        let c = mixture_cdf(&set(&[(0.0, 1.0), (2.0, 1.0)]), 1.0).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cdf_matches_numerical_integration() {
        // Simpson integration of the mixture density as an independent
        // oracle, compared on a grid of 100 points.
        let mixture = set(&[(-1.0, 0.6), (0.5, 0.2), (2.2, 1.3)]);
        let lo = -10.0;
        let density = |y: f64| {
            mixture
                .components()
                .iter()
                .map(|c| {
                    let z = (y - c.mean) / c.variance.sqrt();
                    (-0.5 * z * z).exp() / (c.variance.sqrt() * (2.0 * std::f64::consts::PI).sqrt())
                })
                .sum::<f64>()
                / mixture.num_samples() as f64
        };
        let simpson_to = |upper: f64| {
            let intervals = 20_000;
            let h = (upper - lo) / intervals as f64;
            let mut total = density(lo) + density(upper);
            for i in 1..intervals {
                let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
                total += weight * density(lo + i as f64 * h);
            }
            total * h / 3.0
        };
        for i in 0..100 {
            let y = -6.0 + 12.0 * i as f64 / 99.0;
            let cdf = mixture_cdf(&mixture, y).unwrap();
            let quadrature = simpson_to(y);
            assert!(
                (cdf - quadrature).abs() < 1e-6,
                "cdf {cdf} vs quadrature {quadrature} at y={y}"
            );
        }
    }

    #[test]
    fn degenerate_component_is_rejected() {
        let err = mixture_cdf(&set(&[(0.0, 0.0)]), 0.0).unwrap_err();
        assert!(matches!(err, RegressionError::DegenerateComponent { index: 0 }));
    }

    #[test]
    fn standard_normal_95_interval() {
        // Oracle: root-find on the erfc-based CDF, frozen as the classic
        // 1.959963984540054 two-sided quantile.
        let summary = distribution_summary(&set(&[(0.0, 1.0)]), &[], 0.95).unwrap();
        assert!((summary.interval.lower + 1.959963984540054).abs() < 1e-6);
        assert!((summary.interval.upper - 1.959963984540054).abs() < 1e-6);
    }

    #[test]
    fn two_sigma_convention_for_crime_example() {
        // A +/-10 band around 943 read as two standard deviations per side
        // means sigma = 5; the interval at the matching coverage is
        // (933, 953).
        let two_sigma_mass = libm::erf(std::f64::consts::SQRT_2);
        let summary =
            distribution_summary(&set(&[(943.0, 25.0)]), &[], two_sigma_mass).unwrap();
        assert!((summary.interval.lower - 933.0).abs() < 1e-6);
        assert!((summary.interval.upper - 953.0).abs() < 1e-6);
    }

    #[test]
    fn median_of_any_gaussian_is_its_mean() {
        for &(mean, variance) in &[(0.0, 1.0), (-7.5, 0.04), (123.0, 400.0), (3.0, 1e-6)] {
            let m = percentile(&set(&[(mean, variance)]), 0.5).unwrap();
            let scale = variance.sqrt().max(1.0);
            assert!((m - mean).abs() < 1e-9 * scale, "median {m} for mean {mean}");
        }
    }

    #[test]
    fn summary_orders_quartiles_and_whiskers() {
        let summary =
            distribution_summary(&set(&[(0.0, 1.0), (4.0, 2.0)]), &[0.1, 0.9, 0.5], 0.5).unwrap();
        let (q1, median, q3) = summary.quartiles;
        assert!(q1 <= median && median <= q3);
        assert!(summary.whiskers.0 <= q1 && q3 <= summary.whiskers.1);
        assert!(summary.percentiles.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!((summary.whiskers.0 - (q1 - 1.5 * (q3 - q1))).abs() < 1e-12);
    }

    #[test]
    fn central_interval_covers_the_stated_mass() {
        // Sampling oracle: the fraction of 1e5 mixture draws inside the
        // p = 0.95 interval must be 0.95 +/- 0.01.
        use crate::lab::rng::CounterRng;
        let mixture = set(&[(-0.5, 0.4), (1.5, 1.2), (4.0, 0.09)]);
        let summary = distribution_summary(&mixture, &[], 0.95).unwrap();
        let mut rng = CounterRng::new(424242);
        let draws = 100_000;
        let mut inside = 0usize;
        for _ in 0..draws {
            let c = &mixture.components()[rng.index(mixture.num_samples())];
            let y = c.mean + c.std_dev() * rng.standard_normal();
            if y >= summary.interval.lower && y <= summary.interval.upper {
                inside += 1;
            }
        }
        let fraction = inside as f64 / draws as f64;
        assert!(
            (fraction - 0.95).abs() < 0.01,
            "coverage {fraction} for interval {:?}",
            summary.interval
        );
    }

    proptest! {
        #[test]
        fn percentile_inverts_cdf(
            means in proptest::collection::vec(-5.0f64..5.0, 1..6),
            variances in proptest::collection::vec(0.01f64..4.0, 6),
            level in 0.001f64..0.999,
        ) {
            let components: Vec<(f64, f64)> =
                means.iter().zip(&variances).map(|(&m, &v)| (m, v)).collect();
            let mixture = set(&components);
            let value = percentile(&mixture, level).unwrap();
            let roundtrip = mixture_cdf(&mixture, value).unwrap();
            prop_assert!((roundtrip - level).abs() < 1e-8);
        }

        #[test]
        fn cdf_is_monotone(
            means in proptest::collection::vec(-5.0f64..5.0, 1..6),
            variances in proptest::collection::vec(0.01f64..4.0, 6),
            a in -20.0f64..20.0,
            b in -20.0f64..20.0,
        ) {
            let components: Vec<(f64, f64)> =
                means.iter().zip(&variances).map(|(&m, &v)| (m, v)).collect();
            let mixture = set(&components);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(mixture_cdf(&mixture, lo).unwrap() <= mixture_cdf(&mixture, hi).unwrap());
        }
    }
}
