//! The switching ensemble.
//!
//! The training set is split into `k` folds; member `j` is trained on every
//! fold except fold `j`. A query is answered by the member whose excluded
//! fold contains the query's nearest training point, so a training sample
//! is never answered by a model that saw it.

mod index;
mod persist;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{find_duplicates, Dataset, DuplicateGroups};
use crate::error::{PaseError, Result};
use crate::nn::{ConfidenceVector, MlpModel, TrainConfig};
use crate::predict::Predictor;
use crate::rng::SplitMix64;

pub use index::{squared_l2, BruteForceL2, NearestIndex, Neighbor};
pub use persist::{load_ensemble, save_ensemble};

pub const DEFAULT_K: usize = 5;

/// Partition of training ids into `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    fold_of: BTreeMap<u64, usize>,
}

impl FoldAssignment {
    pub fn new(k: usize, fold_of: BTreeMap<u64, usize>) -> Result<Self> {
        if k < 2 {
            return Err(PaseError::Config(format!("k must be at least 2, got {k}")));
        }
        if let Some((id, f)) = fold_of.iter().find(|(_, &f)| f >= k) {
            return Err(PaseError::Config(format!("id {id} assigned to fold {f} >= k = {k}")));
        }
        Ok(Self { k, fold_of })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, id: u64) -> Option<usize> {
        self.fold_of.get(&id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.fold_of.iter().map(|(&id, &f)| (id, f))
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.fold_of.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Ids outside fold `j`, i.e. the training ids of member `j`.
    pub fn training_ids(&self, j: usize) -> Vec<u64> {
        self.fold_of
            .iter()
            .filter(|(_, &f)| f != j)
            .map(|(&id, _)| id)
            .collect()
    }
}

/// Seeded fold assignment that keeps each duplicate group inside one fold.
///
/// Groups are shuffled, then (stably) ordered largest first and each is
/// placed in the currently smallest fold, lowest index on ties. With no
/// duplicates this is a plain round-robin deal over a shuffled order, giving
/// fold sizes that differ by at most one; otherwise sizes differ by at most
/// the largest group.
pub fn assign_folds(train: &Dataset, k: usize, seed: u64, dups: &DuplicateGroups) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(PaseError::Config(format!("k must be at least 2, got {k}")));
    }
    let mut groups = dups.members();
    for id in train.ids() {
        if dups.group_of(*id).is_none() {
            return Err(PaseError::Input(format!(
                "training id {id} missing from duplicate groups"
            )));
        }
    }
    if k > groups.len() {
        return Err(PaseError::Config(format!(
            "k = {k} exceeds the {} distinct training samples",
            groups.len()
        )));
    }
    SplitMix64::new(seed).shuffle(&mut groups);
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

    let mut sizes = vec![0usize; k];
    let mut fold_of = BTreeMap::new();
    for group in groups {
        let fold = (0..k).min_by_key(|&f| (sizes[f], f)).expect("k >= 2");
        sizes[fold] += group.len();
        for id in group {
            fold_of.insert(id, fold);
        }
    }
    FoldAssignment::new(k, fold_of)
}

/// `k` models, their folds, and the switch index over the full training set.
pub struct SwitchEnsemble {
    models: Vec<MlpModel>,
    folds: FoldAssignment,
    index: Box<dyn NearestIndex>,
    /// Fold of each indexed row, so queries avoid a map lookup.
    fold_by_position: Vec<usize>,
    train: Dataset,
}

impl std::fmt::Debug for SwitchEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SwitchEnsemble")
            .field("k", &self.models.len())
            .field("train_len", &self.train.len())
            .finish_non_exhaustive()
    }
}

impl SwitchEnsemble {
    /// Assemble from already trained parts, checking consistency.
    pub fn from_parts(models: Vec<MlpModel>, folds: FoldAssignment, train: Dataset) -> Result<Self> {
        let index = BruteForceL2::build(&train)?;
        Self::with_index(models, folds, train, Box::new(index))
    }

    pub fn with_index(
        models: Vec<MlpModel>,
        folds: FoldAssignment,
        train: Dataset,
        index: Box<dyn NearestIndex>,
    ) -> Result<Self> {
        if models.len() != folds.k() {
            return Err(PaseError::Config(format!(
                "{} models for k = {}",
                models.len(),
                folds.k()
            )));
        }
        if index.len() != train.len() || index.dim() != train.dim() {
            return Err(PaseError::Config("index does not cover the training set".into()));
        }
        let fold_by_position = train
            .ids()
            .iter()
            .map(|&id| {
                folds
                    .fold_of(id)
                    .ok_or_else(|| PaseError::Config(format!("training id {id} has no fold")))
            })
            .collect::<Result<Vec<_>>>()?;
        for m in &models {
            if m.input_dim() != train.dim() {
                return Err(PaseError::Config("member input dim differs from training data".into()));
            }
        }
        Ok(Self {
            models,
            folds,
            index,
            fold_by_position,
            train,
        })
    }

    pub fn k(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[MlpModel] {
        &self.models
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    pub fn train_data(&self) -> &Dataset {
        &self.train
    }

    pub fn index(&self) -> &dyn NearestIndex {
        self.index.as_ref()
    }

    /// Recorded training ids of member `j`.
    pub fn member_training_ids(&self, j: usize) -> Vec<u64> {
        self.folds.training_ids(j)
    }

    pub fn nearest(&self, x: &[f64]) -> Result<Neighbor> {
        self.index.nearest(x)
    }

    /// Member excluding the fold of the query's nearest training point.
    pub fn select_model(&self, x: &[f64]) -> Result<usize> {
        let n = self.index.nearest(x)?;
        Ok(self.fold_by_position[n.position])
    }

    pub fn pase_predict(&self, x: &[f64]) -> Result<ConfidenceVector> {
        let j = self.select_model(x)?;
        self.models[j].forward(x)
    }

    /// Test accuracy of the switched predictions.
    pub fn evaluate(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(PaseError::Input("empty dataset".into()));
        }
        let mut correct = 0usize;
        for (x, &y) in data.rows().zip(data.labels()) {
            if crate::nn::argmax(&self.pase_predict(x)?) == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

impl Predictor for SwitchEnsemble {
    fn input_dim(&self) -> usize {
        self.train.dim()
    }

    fn class_count(&self) -> usize {
        self.models[0].class_count()
    }

    fn predict(&self, x: &[f64]) -> Result<ConfidenceVector> {
        self.pase_predict(x)
    }
}

/// Seed of member `j`: the ensemble seed plus `j`.
pub fn member_seed(seed: u64, j: usize) -> u64 {
    seed.wrapping_add(j as u64)
}

/// Train member `j` on every fold but `j`. Each member is initialized and
/// trained from its own derived seed.
pub fn train_member(
    train: &Dataset,
    folds: &FoldAssignment,
    hidden: &[usize],
    cfg: &TrainConfig,
    j: usize,
) -> Result<MlpModel> {
    let positions: Vec<usize> = train
        .ids()
        .iter()
        .enumerate()
        .filter(|(_, id)| folds.fold_of(**id) != Some(j))
        .map(|(p, _)| p)
        .collect();
    if positions.is_empty() {
        return Err(PaseError::Config(format!("member {j} has no training data")));
    }
    let subset = train.select(&positions);
    let seed = member_seed(cfg.seed, j);
    let dims = layer_dims(train, hidden);
    let model = MlpModel::init(&dims, seed)?;
    Ok(model.train(&subset, &cfg.with_seed(seed))?.model)
}

pub(crate) fn layer_dims(data: &Dataset, hidden: &[usize]) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(data.dim());
    dims.extend_from_slice(hidden);
    dims.push(data.class_count());
    dims
}

/// Train all `k` members sequentially and build the switch index.
pub fn train_pase(
    train: &Dataset,
    folds: &FoldAssignment,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<SwitchEnsemble> {
    check_coverage(train, folds)?;
    let models = (0..folds.k())
        .map(|j| train_member(train, folds, hidden, cfg, j))
        .collect::<Result<Vec<_>>>()?;
    SwitchEnsemble::from_parts(models, folds.clone(), train.clone())
}

/// As [`train_pase`], with members trained concurrently. Produces identical
/// parameters; only wall time differs.
pub fn train_pase_parallel(
    train: &Dataset,
    folds: &FoldAssignment,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<SwitchEnsemble> {
    use rayon::prelude::*;
    check_coverage(train, folds)?;
    let models = (0..folds.k())
        .into_par_iter()
        .map(|j| train_member(train, folds, hidden, cfg, j))
        .collect::<Result<Vec<_>>>()?;
    SwitchEnsemble::from_parts(models, folds.clone(), train.clone())
}

fn check_coverage(train: &Dataset, folds: &FoldAssignment) -> Result<()> {
    if let Some(id) = train.ids().iter().find(|id| folds.fold_of(**id).is_none()) {
        return Err(PaseError::Input(format!("training id {id} has no fold")));
    }
    Ok(())
}

/// Convenience: duplicate-aware folds plus training in one call.
pub fn build_pase(
    train: &Dataset,
    k: usize,
    hidden: &[usize],
    cfg: &TrainConfig,
    fold_seed: u64,
) -> Result<SwitchEnsemble> {
    let dups = find_duplicates(train);
    let folds = assign_folds(train, k, fold_seed, &dups)?;
    train_pase(train, &folds, hidden, cfg)
}
