//! Shadow-model membership inference.
//!
//! The attacker trains shadow models that imitate the target on data it
//! owns, records how each shadow's confidence vectors differ between its
//! own training samples and held-out samples, and fits one binary
//! classifier per class on those records. The target is then queried only
//! through [`Predictor`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{PaseError, Result};
use crate::nn::{argmax, ConfidenceVector, MlpModel, TrainConfig};
use crate::predict::Predictor;
use crate::rng::{derive_seed, SplitMix64};
use crate::switch::layer_dims;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowConfig {
    pub n_shadows: usize,
    /// Number of "in" samples, and equally of "out" samples, per shadow.
    pub per_shadow_n: usize,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shadow {
    pub model: MlpModel,
    pub train_ids: Vec<u64>,
    pub out_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowSet {
    pub shadows: Vec<Shadow>,
}

/// Train `n_shadows` shadow models on disjoint in/out draws from the pool.
/// Draws are independent across shadows. Shadows train concurrently; each
/// has its own derived seed so the result does not depend on scheduling.
pub fn train_shadows(pool: &Dataset, cfg: &ShadowConfig, seed: u64) -> Result<ShadowSet> {
    if cfg.n_shadows == 0 || cfg.per_shadow_n == 0 {
        return Err(PaseError::Config(
            "need at least one shadow with a positive sample count".into(),
        ));
    }
    if pool.len() < 2 * cfg.per_shadow_n {
        return Err(PaseError::Config(format!(
            "attack pool of {} samples cannot supply {} in + {} out per shadow",
            pool.len(),
            cfg.per_shadow_n,
            cfg.per_shadow_n
        )));
    }
    cfg.train.validate()?;
    let dims = layer_dims(pool, &cfg.hidden);
    let shadows = (0..cfg.n_shadows)
        .into_par_iter()
        .map(|s| {
            let mut order: Vec<usize> = (0..pool.len()).collect();
            SplitMix64::new(derive_seed(seed, &format!("shadow-split-{s}"))).shuffle(&mut order);
            let (inside, rest) = order.split_at(cfg.per_shadow_n);
            let outside = &rest[..cfg.per_shadow_n];
            let train = pool.select(inside);
            let model_seed = derive_seed(seed, &format!("shadow-model-{s}"));
            let model = MlpModel::init(&dims, model_seed)?
                .train(&train, &cfg.train.with_seed(model_seed))?
                .model;
            Ok(Shadow {
                model,
                train_ids: train.ids().to_vec(),
                out_ids: outside.iter().map(|&p| pool.ids()[p]).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShadowSet { shadows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub confidence: ConfidenceVector,
    pub true_class: usize,
    pub membership: bool,
}

/// Query every shadow on its own in and out samples.
pub fn build_attack_records(shadows: &ShadowSet, pool: &Dataset) -> Result<Vec<AttackRecord>> {
    let pos = pool.position_map();
    let mut records = Vec::new();
    for shadow in &shadows.shadows {
        for (ids, membership) in [(&shadow.train_ids, true), (&shadow.out_ids, false)] {
            for id in ids {
                let &p = pos
                    .get(id)
                    .ok_or_else(|| PaseError::Input(format!("shadow id {id} not in the attack pool")))?;
                records.push(AttackRecord {
                    confidence: shadow.model.forward(pool.row(p))?,
                    true_class: pool.labels()[p],
                    membership,
                });
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassAttack {
    /// Binary classifier over the confidence vector; output index 1 = member.
    Model(MlpModel),
    /// Fallback for a class whose records carry a single membership label.
    Constant { member: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackModel {
    pub per_class: Vec<ClassAttack>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackTrainConfig {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl AttackModel {
    pub fn class_count(&self) -> usize {
        self.per_class.len()
    }

    /// Membership guess for one confidence vector of a sample labelled `class`.
    pub fn infer(&self, confidence: &[f64], class: usize) -> Result<bool> {
        match self.per_class.get(class) {
            None => Err(PaseError::Input(format!("no attack model for class {class}"))),
            Some(ClassAttack::Constant { member }) => Ok(*member),
            Some(ClassAttack::Model(m)) => Ok(argmax(&m.forward(confidence)?) == 1),
        }
    }
}

/// One binary classifier per class, each trained on that class's records only.
pub fn train_attack(records: &[AttackRecord], class_count: usize, cfg: &AttackTrainConfig) -> Result<AttackModel> {
    cfg.train.validate()?;
    if let Some(r) = records.iter().find(|r| r.confidence.len() != class_count) {
        return Err(PaseError::Input(format!(
            "record confidence of length {} for {class_count} classes",
            r.confidence.len()
        )));
    }
    let per_class = (0..class_count)
        .into_par_iter()
        .map(|class| {
            let mine: Vec<&AttackRecord> = records.iter().filter(|r| r.true_class == class).collect();
            let members = mine.iter().filter(|r| r.membership).count();
            if members == 0 || members == mine.len() {
                let member = members * 2 > mine.len();
                log::warn!(
                    "class {class}: {} attack records all labelled {}; using a constant guess",
                    mine.len(),
                    if member { "member" } else { "non-member" }
                );
                return Ok(ClassAttack::Constant { member });
            }
            let features: Vec<f64> = mine.iter().flat_map(|r| r.confidence.iter().copied()).collect();
            let labels: Vec<usize> = mine.iter().map(|r| usize::from(r.membership)).collect();
            let data = Dataset::with_sequential_ids(features, class_count, labels, 2)?;
            let mut dims = vec![class_count];
            dims.extend_from_slice(&cfg.hidden);
            dims.push(2);
            let seed = cfg.train.seed.wrapping_add(class as u64);
            let model = MlpModel::init(&dims, seed)?
                .train(&data, &cfg.train.with_seed(seed))?
                .model;
            Ok(ClassAttack::Model(model))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackModel { per_class })
}

/// Membership confusion counts; "positive" means "member".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    fn add(&mut self, member: bool, guessed_member: bool) {
        match (member, guessed_member) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub accuracy: f64,
    pub confusion: Confusion,
    /// `None` for classes absent from the evaluation set.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Samples evaluated on each side after balancing.
    pub per_side: usize,
}

/// Seeded subsample of `n` positions out of `data`, order preserved.
fn subsample(data: &Dataset, n: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    rng.shuffle(&mut order);
    order.truncate(n);
    order.sort_unstable();
    order
}

/// Score the attack against a target seen only through its predictions.
///
/// The larger of the two sets is truncated by seeded subsampling so both
/// sides contribute equally and 50% is the chance level.
pub fn attack_accuracy(
    attack: &AttackModel,
    target: &dyn Predictor,
    members: &Dataset,
    nonmembers: &Dataset,
    seed: u64,
) -> Result<AttackReport> {
    if members.is_empty() || nonmembers.is_empty() {
        return Err(PaseError::Input("member and non-member sets must be non-empty".into()));
    }
    if attack.class_count() != target.class_count() {
        return Err(PaseError::Input(format!(
            "attack covers {} classes, target outputs {}",
            attack.class_count(),
            target.class_count()
        )));
    }
    let per_side = members.len().min(nonmembers.len());
    let mut rng = SplitMix64::new(seed);
    let member_pos = subsample(members, per_side, &mut rng);
    let nonmember_pos = subsample(nonmembers, per_side, &mut rng);

    let queries: Vec<(&[f64], usize, bool)> = member_pos
        .iter()
        .map(|&p| (members.row(p), members.labels()[p], true))
        .chain(
            nonmember_pos
                .iter()
                .map(|&p| (nonmembers.row(p), nonmembers.labels()[p], false)),
        )
        .collect();

    let guesses = queries
        .par_iter()
        .map(|&(x, class, _)| {
            let confidence = target.predict(x)?;
            attack.infer(&confidence, class)
        })
        .collect::<Result<Vec<bool>>>()?;

    let classes = attack.class_count();
    let mut confusion = Confusion::default();
    let mut per_class = vec![(0u64, 0u64); classes];
    for (&(_, class, member), &guess) in queries.iter().zip(&guesses) {
        confusion.add(member, guess);
        per_class[class].1 += 1;
        if member == guess {
            per_class[class].0 += 1;
        }
    }
    Ok(AttackReport {
        accuracy: confusion.accuracy(),
        confusion,
        per_class_accuracy: per_class
            .into_iter()
            .map(|(ok, total)| (total > 0).then(|| ok as f64 / total as f64))
            .collect(),
        per_side,
    })
}
