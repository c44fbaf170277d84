use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{AttackTrainConfig, ShadowConfig};
use crate::data::{self, Dataset};
use crate::error::{PaseError, Result};
use crate::nn::TrainConfig;
use crate::rng::derive_seed;

/// Training hyperparameters of one model role; the seed is derived from
/// the experiment seed at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default = "yes")]
    pub shuffle: bool,
}

fn yes() -> bool {
    true
}

impl Hyper {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed,
            shuffle: self.shuffle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdxPart {
    pub images: PathBuf,
    pub labels: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Blobs {
        class_count: usize,
        per_class: usize,
        dim: usize,
        spread: f64,
        #[serde(default)]
        label_noise: f64,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        has_header: bool,
        /// Defaults to the last column.
        #[serde(default)]
        label_column: Option<usize>,
    },
    /// One or more IDX image/label pairs, merged in order (e.g. the
    /// official train and test files), optionally subsampled.
    Idx {
        parts: Vec<IdxPart>,
        #[serde(default)]
        limit: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub target_fraction: f64,
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            target_fraction: 0.5,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaseConfig {
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PateConfig {
    pub n_teachers: usize,
    /// Share of the target training split given to teachers; the rest is
    /// the student's pool.
    pub teacher_fraction: f64,
    #[serde(default)]
    pub noise_scale: f64,
    pub teacher_train: Hyper,
    pub student_train: Hyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowSpec {
    pub n_shadows: usize,
    /// In-samples (and out-samples) per shadow; defaults to the target's
    /// training-set size.
    #[serde(default)]
    pub per_shadow_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub hidden: Vec<usize>,
    pub train: Hyper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub repetitions: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { repetitions: 3 }
    }
}

/// Everything that determines a run. Every random draw is derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub split: SplitConfig,
    /// Hidden widths shared by the baseline, ensemble members, shadows,
    /// teachers and student.
    pub hidden: Vec<usize>,
    pub train: Hyper,
    pub pase: PaseConfig,
    pub pate: PateConfig,
    pub shadows: ShadowSpec,
    pub attack: AttackSpec,
    #[serde(default)]
    pub timing: TimingConfig,
    /// Where stage artifacts and reports go; not part of the config hash.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Stage labels used to derive independent seeds.
pub mod seeds {
    pub const DATA: &str = "data";
    pub const LABEL_NOISE: &str = "label-noise";
    pub const SUBSAMPLE: &str = "subsample";
    pub const SPLIT: &str = "split";
    pub const BASELINE: &str = "baseline";
    pub const PASE_FOLDS: &str = "pase-folds";
    pub const PASE_MODELS: &str = "pase-models";
    pub const PATE_SPLIT: &str = "pate-split";
    pub const PATE_TEACHERS: &str = "pate-teachers";
    pub const PATE_VOTES: &str = "pate-votes";
    pub const PATE_STUDENT: &str = "pate-student";
    pub const SHADOWS: &str = "shadows";
    pub const ATTACK_MODEL: &str = "attack-model";
    pub const ATTACK_EVAL: &str = "attack-eval";
}

fn check_hyper(role: &str, h: &Hyper) -> Result<()> {
    h.with_seed(0)
        .validate()
        .map_err(|e| PaseError::Config(format!("{role}: {e}")))
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PaseError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| PaseError::format(path, None, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed_for(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(PaseError::Config("name must not be empty".into()));
        }
        match &self.dataset {
            DatasetSpec::Blobs {
                class_count,
                per_class,
                dim,
                spread,
                label_noise,
            } => {
                if *class_count < 2 || *per_class == 0 || *dim == 0 {
                    return Err(PaseError::Config("blobs need >= 2 classes and positive sizes".into()));
                }
                if !(spread.is_finite() && *spread >= 0.0) {
                    return Err(PaseError::Config("blob spread must be >= 0".into()));
                }
                if !(0.0..=1.0).contains(label_noise) {
                    return Err(PaseError::Config("label_noise must be in [0, 1]".into()));
                }
            }
            DatasetSpec::Idx { parts, limit } => {
                if parts.is_empty() {
                    return Err(PaseError::Config("idx dataset needs at least one part".into()));
                }
                if *limit == Some(0) {
                    return Err(PaseError::Config("idx limit must be positive".into()));
                }
            }
            DatasetSpec::Csv { .. } => {}
        }
        for (name, f) in [
            ("split.target_fraction", self.split.target_fraction),
            ("split.train_fraction", self.split.train_fraction),
            ("pate.teacher_fraction", self.pate.teacher_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(PaseError::Config(format!("{name} must be in (0, 1), got {f}")));
            }
        }
        if self.hidden.contains(&0) || self.attack.hidden.contains(&0) {
            return Err(PaseError::Config("hidden widths must be positive".into()));
        }
        if self.pase.k < 2 {
            return Err(PaseError::Config(format!("pase.k must be >= 2, got {}", self.pase.k)));
        }
        if self.pate.n_teachers < 2 {
            return Err(PaseError::Config("pate.n_teachers must be >= 2".into()));
        }
        if !(self.pate.noise_scale.is_finite() && self.pate.noise_scale >= 0.0) {
            return Err(PaseError::Config("pate.noise_scale must be >= 0".into()));
        }
        if self.shadows.n_shadows == 0 || self.shadows.per_shadow_n == Some(0) {
            return Err(PaseError::Config("shadows need a positive count and size".into()));
        }
        if self.timing.repetitions < 3 {
            return Err(PaseError::Config(format!(
                "timing.repetitions must be >= 3, got {}",
                self.timing.repetitions
            )));
        }
        check_hyper("train", &self.train)?;
        check_hyper("pate.teacher_train", &self.pate.teacher_train)?;
        check_hyper("pate.student_train", &self.pate.student_train)?;
        check_hyper("attack.train", &self.attack.train)
    }

    /// Stable hash of everything except `output_dir`; keys the artifact cache.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Materialize the full dataset described by `dataset`.
    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSpec::Blobs {
                class_count,
                per_class,
                dim,
                spread,
                label_noise,
            } => {
                let clean = data::gen_blobs(*class_count, *per_class, *dim, *spread, self.seed_for(seeds::DATA))?;
                if *label_noise > 0.0 {
                    data::apply_label_noise(&clean, *label_noise, self.seed_for(seeds::LABEL_NOISE))
                } else {
                    Ok(clean)
                }
            }
            DatasetSpec::Csv {
                path,
                has_header,
                label_column,
            } => data::load_csv(path, *has_header, *label_column),
            DatasetSpec::Idx { parts, limit } => {
                let mut merged: Option<Dataset> = None;
                for part in parts {
                    let d = data::load_idx(&part.images, &part.labels)?;
                    merged = Some(match merged {
                        None => d,
                        Some(m) => {
                            // Re-number the appended part so ids stay unique.
                            let offset = m.len() as u64;
                            let ids = d.ids().iter().map(|i| i + offset).collect();
                            let d = Dataset::new(
                                d.features().to_vec(),
                                d.dim(),
                                d.labels().to_vec(),
                                ids,
                                d.class_count(),
                            )?;
                            m.concat(&d)?
                        }
                    });
                }
                let full = merged.expect("validated non-empty parts");
                match limit {
                    Some(n) if *n < full.len() => {
                        let mut order: Vec<usize> = (0..full.len()).collect();
                        crate::rng::SplitMix64::new(self.seed_for(seeds::SUBSAMPLE)).shuffle(&mut order);
                        order.truncate(*n);
                        order.sort_unstable();
                        Ok(full.select(&order))
                    }
                    _ => Ok(full),
                }
            }
        }
    }

    pub fn shadow_config(&self, target_train_len: usize) -> ShadowConfig {
        ShadowConfig {
            n_shadows: self.shadows.n_shadows,
            per_shadow_n: self.shadows.per_shadow_n.unwrap_or(target_train_len),
            hidden: self.hidden.clone(),
            train: self.train.with_seed(0),
        }
    }

    pub fn attack_train_config(&self) -> AttackTrainConfig {
        AttackTrainConfig {
            hidden: self.attack.hidden.clone(),
            train: self.attack.train.with_seed(self.seed_for(seeds::ATTACK_MODEL)),
        }
    }

    /// The desk-scale synthetic setup: overlapping 10-class blobs in 100
    /// dimensions with 10% label noise, and a wide single-hidden-layer
    /// network trained long enough to memorize its training split. The
    /// dimension is high enough that a 10% student pool or a 1/20 teacher
    /// shard is too small to learn the classes well.
    pub fn desk_blobs(seed: u64) -> Self {
        let train = Hyper {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            shuffle: true,
        };
        Self {
            name: "blobs".into(),
            seed,
            dataset: DatasetSpec::Blobs {
                class_count: 10,
                per_class: 240,
                dim: 100,
                spread: 1.5,
                label_noise: 0.1,
            },
            split: SplitConfig::default(),
            hidden: vec![128],
            train,
            pase: PaseConfig { k: 5 },
            pate: PateConfig {
                n_teachers: 20,
                teacher_fraction: 0.9,
                noise_scale: 0.0,
                teacher_train: train,
                student_train: train,
            },
            shadows: ShadowSpec {
                n_shadows: 10,
                per_shadow_n: None,
            },
            attack: AttackSpec {
                hidden: vec![64],
                train: Hyper {
                    epochs: 40,
                    batch_size: 64,
                    learning_rate: 0.05,
                    momentum: 0.9,
                    shuffle: true,
                },
            },
            timing: TimingConfig::default(),
            output_dir: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_config_is_valid_and_round_trips() {
        let cfg = ExperimentConfig::desk_blobs(1);
        cfg.validate().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::desk_blobs(1);
        let mut b = a.clone();
        b.output_dir = Some("/tmp/elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), ExperimentConfig::desk_blobs(2).hash());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ExperimentConfig::desk_blobs(1);
        c.pase.k = 1;
        assert!(matches!(c.validate(), Err(PaseError::Config(_))));
        let mut c = ExperimentConfig::desk_blobs(1);
        c.timing.repetitions = 2;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::desk_blobs(1);
        c.split.target_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::desk_blobs(1);
        c.train.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_are_stage_specific() {
        let c = ExperimentConfig::desk_blobs(3);
        assert_ne!(c.seed_for(seeds::BASELINE), c.seed_for(seeds::SHADOWS));
    }
}
