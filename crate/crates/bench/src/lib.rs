//! Shared fixtures for the criterion benchmarks.

use pase_core::data::{apply_label_noise, gen_blobs, Dataset};
use pase_core::nn::TrainConfig;
use pase_core::switch::{build_pase, SwitchEnsemble};
use pase_core::MlpModel;

/// Noisy blob training set of `n` rows in `dim` dimensions.
pub fn blob_data(n: usize, dim: usize, seed: u64) -> Dataset {
    let classes = 5;
    let base = gen_blobs(classes, n.div_ceil(classes), dim, 1.0, seed).expect("valid blob params");
    apply_label_noise(&base, 0.1, seed + 1).expect("valid noise fraction")
}

/// Cheap ensemble: the members barely train, which is irrelevant to query cost.
pub fn quick_ensemble(train: &Dataset, k: usize, hidden: usize) -> SwitchEnsemble {
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    build_pase(train, k, &[hidden], &cfg, 0).expect("valid ensemble")
}

pub fn untrained_model(train: &Dataset, hidden: usize) -> MlpModel {
    MlpModel::init(&[train.dim(), hidden, train.class_count()], 0).expect("valid dims")
}
