//! Overlap region detection (ORD) for imbalanced tabular classification.
//!
//! The crate detects majority rows that sit in the class-overlap region using
//! k-fold random-forest disagreement, relabels the training data with a third
//! class, fits class-conditional generators on the result and evaluates
//! classifiers trained on the recomposed synthetic data against real held-out
//! rows.
//!
//! Module map:
//!
//! * [`dataset`]: schema, CSV IO, splitting, standardization, one-hot encoding.
//! * [`learners`]: CART, random forest, logistic regression, AdaBoost, gradient
//!   boosting and a one-hidden-layer MLP.
//! * [`overlap`]: k-fold overlap detection, threshold selection and sweeps.
//! * [`generators`]: conditional GMM, SMOTE family and an external-file bridge.
//! * [`oracle_toy`]: Gaussian blob worlds with a closed-form Bayes oracle.
//! * [`metrics`]: accuracies, F1, AUC, threshold sweeps, paired t-test.
//! * [`experiments`]: efficacy runs, ablations, benchmarks and reports.

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod learners;
pub mod metrics;
pub mod oracle_toy;
pub mod overlap;
pub mod seed;

pub use error::{OrdError, Result};
