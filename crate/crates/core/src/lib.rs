//! Membership-inference defense with switching ensembles.
//!
//! A training set is split into `k` folds and `k` classifiers are trained,
//! each on all folds but one. At inference time the query's nearest
//! training point is looked up and the classifier that never saw that
//! point answers, so training samples are always answered by a model that
//! treats them as unseen data.
//!
//! The crate also carries everything needed to measure the defense: a
//! shadow-model membership attack, a noise-free teacher/student baseline
//! and an experiment harness that reports utility, attack accuracy,
//! training-time ratios and inference latency.

pub mod attack;
pub mod bench;
pub mod data;
pub mod error;
pub mod nn;
pub mod pate;
pub mod predict;
pub mod rng;
pub mod switch;

pub use attack::{AttackModel, AttackRecord, AttackReport, Confusion, ShadowSet};
pub use bench::{ExperimentConfig, ExperimentReport};
pub use data::{Dataset, DuplicateGroups, SplitBundle};
pub use error::{PaseError, Result};
pub use nn::{ConfidenceVector, MlpModel, TrainConfig};
pub use pate::TeacherEnsemble;
pub use predict::Predictor;
pub use switch::{FoldAssignment, NearestIndex, SwitchEnsemble};
