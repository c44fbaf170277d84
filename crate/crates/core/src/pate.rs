//! Teacher/student baseline with plurality-vote labelling.
//!
//! Teachers are trained on disjoint shards; the student is trained on a
//! separate pool labelled by the teachers' vote and is the only model
//! exposed to queries. Vote noise defaults to zero.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{PaseError, Result};
use crate::nn::{argmax, MlpModel, TrainConfig};
use crate::rng::SplitMix64;
use crate::switch::layer_dims;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherEnsemble {
    pub teachers: Vec<MlpModel>,
    /// Sample id -> teacher index.
    pub partition: BTreeMap<u64, usize>,
}

/// Per-class vote counts for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTally {
    pub counts: Vec<f64>,
    pub noise_scale: f64,
}

impl VoteTally {
    /// Winning class; ties go to the lowest index.
    pub fn winner(&self) -> usize {
        argmax(&self.counts)
    }
}

/// Seeded shuffle, contiguous near-equal shards, one teacher per shard.
/// Teacher `t` is seeded with `cfg.seed + t`; teachers train concurrently.
pub fn train_teachers(
    train: &Dataset,
    n_teachers: usize,
    hidden: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TeacherEnsemble> {
    if n_teachers < 2 {
        return Err(PaseError::Config(format!("need at least 2 teachers, got {n_teachers}")));
    }
    if n_teachers > train.len() {
        return Err(PaseError::Config(format!(
            "{n_teachers} teachers would leave empty shards of {} samples",
            train.len()
        )));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    SplitMix64::new(seed).shuffle(&mut order);

    let n = train.len();
    let shards: Vec<&[usize]> = (0..n_teachers)
        .map(|t| &order[t * n / n_teachers..(t + 1) * n / n_teachers])
        .collect();
    let dims = layer_dims(train, hidden);
    let teachers = shards
        .par_iter()
        .enumerate()
        .map(|(t, shard)| {
            let s = cfg.seed.wrapping_add(t as u64);
            Ok(MlpModel::init(&dims, s)?
                .train(&train.select(shard), &cfg.with_seed(s))?
                .model)
        })
        .collect::<Result<Vec<_>>>()?;
    let partition = shards
        .iter()
        .enumerate()
        .flat_map(|(t, shard)| shard.iter().map(move |&p| (train.ids()[p], t)))
        .collect();
    Ok(TeacherEnsemble { teachers, partition })
}

/// As [`train_teachers`] but one teacher at a time, for timing runs.
pub fn train_teachers_sequential(
    train: &Dataset,
    n_teachers: usize,
    hidden: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TeacherEnsemble> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| PaseError::Config(e.to_string()))?;
    pool.install(|| train_teachers(train, n_teachers, hidden, cfg, seed))
}

impl TeacherEnsemble {
    pub fn class_count(&self) -> usize {
        self.teachers[0].class_count()
    }

    /// Count teacher argmax votes, adding Laplace(`noise_scale`) per class if positive.
    pub fn tally(&self, x: &[f64], noise_scale: f64, rng: &mut SplitMix64) -> Result<VoteTally> {
        let mut counts = vec![0.0; self.class_count()];
        for t in &self.teachers {
            counts[t.predict_class(x)?] += 1.0;
        }
        if noise_scale > 0.0 {
            for c in &mut counts {
                *c += rng.laplace(noise_scale);
            }
        }
        Ok(VoteTally { counts, noise_scale })
    }
}

/// Aggregated label of every row of `queries`.
pub fn aggregate_labels(ens: &TeacherEnsemble, queries: &Dataset, noise_scale: f64, seed: u64) -> Result<Vec<usize>> {
    if !(noise_scale.is_finite() && noise_scale >= 0.0) {
        return Err(PaseError::Config(format!(
            "noise scale must be >= 0, got {noise_scale}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    queries
        .rows()
        .map(|x| Ok(ens.tally(x, noise_scale, &mut rng)?.winner()))
        .collect()
}

/// Train the student on `student_pool` features with teacher-voted labels.
pub fn train_student(
    ens: &TeacherEnsemble,
    student_pool: &Dataset,
    hidden: &[usize],
    cfg: &TrainConfig,
    noise_scale: f64,
    seed: u64,
) -> Result<MlpModel> {
    if let Some(id) = student_pool.ids().iter().find(|id| ens.partition.contains_key(id)) {
        return Err(PaseError::Input(format!(
            "student pool sample {id} was used to train a teacher"
        )));
    }
    let labels = aggregate_labels(ens, student_pool, noise_scale, seed)?;
    let labelled = student_pool.relabel(labels)?;
    let dims = layer_dims(student_pool, hidden);
    Ok(MlpModel::init(&dims, cfg.seed)?.train(&labelled, cfg)?.model)
}
