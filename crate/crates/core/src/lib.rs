//! Uncertainty quantification toolkit: predictive-uncertainty metrics for
//! classification and regression, calibration auditing, decision theory with
//! a reject option, group-fairness auditing under sensitive-attribute noise,
//! and a small deterministic ensemble lab that generates the probabilistic
//! predictions the rest of the crate consumes.
//!
//! The `uqkit` binary exposes the batch workflow; see the README for the
//! subcommands and file formats.

pub mod calibration;
pub mod classification;
pub mod cli;
pub mod dataset;
pub mod decision;
pub mod fairness;
pub mod io;
pub mod lab;
pub mod regression;
pub mod report;

pub use dataset::{
    CategoricalDistribution, DataError, Dataset, GaussianComponent, Group, Label, LabeledExample,
    McClassificationSet, McRegressionSet, Prediction, Task, Violation,
};
