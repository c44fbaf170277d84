//! Experiment harness: configuration, the staged pipeline with its on-disk
//! cache, timing helpers and report rendering.

mod config;
mod experiment;
mod report;
mod store;
mod timing;

pub use config::{
    seeds, AttackSpec, DatasetSpec, ExperimentConfig, Hyper, IdxPart, PaseConfig, PateConfig, ShadowSpec, SplitConfig,
    TimingConfig,
};
pub use experiment::{run_experiment, Defense, PateArtifacts, Pipeline};
pub use report::{
    render_report, render_reports, ExperimentReport, Generalization, ReportFormat, RunMetadata, SplitSizes, Triple,
};
pub use store::ArtifactStore;
pub use timing::{measure_inference_time, measure_training_ratio, timed, InferenceTiming, TrainTimings};
