use std::cell::OnceCell;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{seeds, ExperimentConfig};
use super::report::{ExperimentReport, Generalization, RunMetadata, SplitSizes, Triple};
use super::store::ArtifactStore;
use super::timing::{measure_inference_time, measure_training_ratio, timed, TrainTimings};
use crate::attack::{
    attack_accuracy, build_attack_records, train_attack, train_shadows, AttackModel, AttackReport, ShadowSet,
};
use crate::data::{find_duplicates, repartition, Dataset, SplitBundle, SplitManifest};
use crate::error::{Result, StageContext};
use crate::nn::MlpModel;
use crate::pate::{train_student, train_teachers_sequential, TeacherEnsemble};
use crate::predict::Predictor;
use crate::rng::SplitMix64;
use crate::switch::{assign_folds, layer_dims, load_ensemble, save_ensemble, train_pase, SwitchEnsemble};

/// Which deployed model an evaluation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defense {
    Baseline,
    Pase,
    Pate,
}

impl Defense {
    pub const ALL: [Defense; 3] = [Defense::Baseline, Defense::Pase, Defense::Pate];

    pub fn name(self) -> &'static str {
        match self {
            Defense::Baseline => "baseline",
            Defense::Pase => "pase",
            Defense::Pate => "pate",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Timed<T> {
    artifact: T,
    train_seconds: f64,
}

/// Teachers plus the deployed student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PateArtifacts {
    pub teachers: TeacherEnsemble,
    pub student: MlpModel,
    pub teacher_ids: Vec<u64>,
    pub student_pool_ids: Vec<u64>,
}

/// Runs the experiment stage by stage. Each stage is computed at most once
/// per pipeline and, when an output directory is configured, persisted so
/// later pipelines with the same config reuse it.
pub struct Pipeline {
    cfg: ExperimentConfig,
    store: Option<ArtifactStore>,
    data: OnceCell<Dataset>,
    split: OnceCell<SplitBundle>,
    baseline: OnceCell<(MlpModel, Duration)>,
    pase: OnceCell<(SwitchEnsemble, Duration)>,
    pate: OnceCell<(PateArtifacts, Duration)>,
    shadows: OnceCell<ShadowSet>,
    attack: OnceCell<AttackModel>,
}

fn cached<T>(cell: &OnceCell<T>, compute: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = compute()?;
    Ok(cell.get_or_init(|| v))
}

impl Pipeline {
    /// Validates the config; opens the artifact store if an output
    /// directory is set.
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate().stage("config")?;
        let store = match &cfg.output_dir {
            Some(dir) => Some(ArtifactStore::open(dir, &cfg.hash()).stage("config")?),
            None => None,
        };
        Ok(Self {
            cfg,
            store,
            data: OnceCell::new(),
            split: OnceCell::new(),
            baseline: OnceCell::new(),
            pase: OnceCell::new(),
            pate: OnceCell::new(),
            shadows: OnceCell::new(),
            attack: OnceCell::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn store(&self) -> Option<&ArtifactStore> {
        self.store.as_ref()
    }

    fn load<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<Option<T>> {
        match &self.store {
            Some(s) => s.get_json(name),
            None => Ok(None),
        }
    }

    fn save<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        match &self.store {
            Some(s) => s.put_json(name, value),
            None => Ok(()),
        }
    }

    pub fn dataset(&self) -> Result<&Dataset> {
        cached(&self.data, || self.cfg.load_dataset()).stage("data")
    }

    pub fn split(&self) -> Result<&SplitBundle> {
        cached(&self.split, || {
            let full = self.dataset()?;
            if let Some(m) = self.load::<SplitManifest>("split.json")? {
                return SplitBundle::from_manifest(full, &m);
            }
            let s = repartition(
                full,
                self.cfg.split.target_fraction,
                self.cfg.split.train_fraction,
                self.cfg.seed_for(seeds::SPLIT),
            )?;
            self.save("split.json", &s.manifest())?;
            Ok(s)
        })
        .stage("split")
    }

    fn dims(&self) -> Result<Vec<usize>> {
        Ok(layer_dims(self.dataset()?, &self.cfg.hidden))
    }

    pub fn baseline(&self) -> Result<(&MlpModel, Duration)> {
        let (m, t) = cached(&self.baseline, || {
            if let Some(c) = self.load::<Timed<MlpModel>>("baseline.json")? {
                return Ok((c.artifact, Duration::from_secs_f64(c.train_seconds)));
            }
            let train = &self.split()?.target_train;
            let seed = self.cfg.seed_for(seeds::BASELINE);
            let dims = self.dims()?;
            let (model, elapsed) = timed(|| {
                Ok(MlpModel::init(&dims, seed)?
                    .train(train, &self.cfg.train.with_seed(seed))?
                    .model)
            })?;
            self.save(
                "baseline.json",
                &Timed {
                    artifact: &model,
                    train_seconds: elapsed.as_secs_f64(),
                },
            )?;
            Ok((model, elapsed))
        })
        .stage("baseline")?;
        Ok((m, *t))
    }

    /// Members are trained one after another so the recorded wall time is
    /// the total training cost.
    pub fn pase(&self) -> Result<(&SwitchEnsemble, Duration)> {
        let (e, t) = cached(&self.pase, || {
            if let Some(store) = &self.store {
                if let Some(secs) = store.get_json::<f64>("pase/train_seconds.json")? {
                    return Ok((load_ensemble(store.path("pase"))?, Duration::from_secs_f64(secs)));
                }
            }
            let train = &self.split()?.target_train;
            let cfg = self.cfg.train.with_seed(self.cfg.seed_for(seeds::PASE_MODELS));
            let (ens, elapsed) = timed(|| {
                let dups = find_duplicates(train);
                let folds = assign_folds(train, self.cfg.pase.k, self.cfg.seed_for(seeds::PASE_FOLDS), &dups)?;
                train_pase(train, &folds, &self.cfg.hidden, &cfg)
            })?;
            if let Some(store) = &self.store {
                save_ensemble(&ens, store.path("pase"))?;
                store.put_json("pase/train_seconds.json", &elapsed.as_secs_f64())?;
            }
            Ok((ens, elapsed))
        })
        .stage("pase")?;
        Ok((e, *t))
    }

    pub fn pate(&self) -> Result<(&PateArtifacts, Duration)> {
        let (p, t) = cached(&self.pate, || {
            if let Some(c) = self.load::<Timed<PateArtifacts>>("pate.json")? {
                return Ok((c.artifact, Duration::from_secs_f64(c.train_seconds)));
            }
            let train = &self.split()?.target_train;
            let pate = &self.cfg.pate;
            let mut order: Vec<usize> = (0..train.len()).collect();
            SplitMix64::new(self.cfg.seed_for(seeds::PATE_SPLIT)).shuffle(&mut order);
            let cut = ((pate.teacher_fraction * train.len() as f64).round() as usize).clamp(1, train.len() - 1);
            let teacher_data = train.select(&order[..cut]);
            let student_pool = train.select(&order[cut..]);
            let teacher_cfg = pate.teacher_train.with_seed(self.cfg.seed_for(seeds::PATE_TEACHERS));
            let student_cfg = pate.student_train.with_seed(self.cfg.seed_for(seeds::PATE_STUDENT));
            let ((teachers, student), elapsed) = timed(|| {
                let teachers = train_teachers_sequential(
                    &teacher_data,
                    pate.n_teachers,
                    &self.cfg.hidden,
                    &teacher_cfg,
                    self.cfg.seed_for(seeds::PATE_SPLIT),
                )?;
                let student = train_student(
                    &teachers,
                    &student_pool,
                    &self.cfg.hidden,
                    &student_cfg,
                    pate.noise_scale,
                    self.cfg.seed_for(seeds::PATE_VOTES),
                )?;
                Ok((teachers, student))
            })?;
            let artifacts = PateArtifacts {
                teachers,
                student,
                teacher_ids: teacher_data.ids().to_vec(),
                student_pool_ids: student_pool.ids().to_vec(),
            };
            self.save(
                "pate.json",
                &Timed {
                    artifact: &artifacts,
                    train_seconds: elapsed.as_secs_f64(),
                },
            )?;
            Ok((artifacts, elapsed))
        })
        .stage("pate")?;
        Ok((p, *t))
    }

    pub fn shadows(&self) -> Result<&ShadowSet> {
        cached(&self.shadows, || {
            if let Some(s) = self.load::<ShadowSet>("shadows.json")? {
                return Ok(s);
            }
            let split = self.split()?;
            let cfg = self.cfg.shadow_config(split.target_train.len());
            let set = train_shadows(&split.attack_pool, &cfg, self.cfg.seed_for(seeds::SHADOWS))?;
            self.save("shadows.json", &set)?;
            Ok(set)
        })
        .stage("shadows")
    }

    pub fn attack_model(&self) -> Result<&AttackModel> {
        cached(&self.attack, || {
            if let Some(a) = self.load::<AttackModel>("attack_model.json")? {
                return Ok(a);
            }
            let split = self.split()?;
            let records = build_attack_records(self.shadows()?, &split.attack_pool)?;
            let model = train_attack(
                &records,
                split.attack_pool.class_count(),
                &self.cfg.attack_train_config(),
            )?;
            self.save("attack_model.json", &model)?;
            Ok(model)
        })
        .stage("attack-model")
    }

    /// The deployed model of one defense, training it if needed.
    pub fn target(&self, defense: Defense) -> Result<&dyn Predictor> {
        Ok(match defense {
            Defense::Baseline => self.baseline()?.0,
            Defense::Pase => self.pase()?.0,
            Defense::Pate => &self.pate()?.0.student,
        })
    }

    /// Test accuracy of one defense.
    pub fn utility(&self, defense: Defense) -> Result<f64> {
        let test = &self.split()?.target_test;
        match defense {
            Defense::Baseline => self.baseline()?.0.evaluate(test),
            Defense::Pase => self.pase()?.0.evaluate(test),
            Defense::Pate => self.pate()?.0.student.evaluate(test),
        }
        .stage("evaluate")
    }

    /// Membership attack against one defense. Members are the target
    /// training split, except for PATE where they are the samples its
    /// teachers trained on; non-members are the target test split.
    pub fn attack_report(&self, defense: Defense) -> Result<AttackReport> {
        let split = self.split()?;
        let attack = self.attack_model()?;
        let target = self.target(defense)?;
        let teacher_members;
        let members = match defense {
            Defense::Pate => {
                teacher_members = self
                    .dataset()?
                    .select_ids(&self.pate()?.0.teacher_ids)
                    .stage("attack-eval")?;
                &teacher_members
            }
            _ => &split.target_train,
        };
        attack_accuracy(
            attack,
            target,
            members,
            &split.target_test,
            self.cfg.seed_for(seeds::ATTACK_EVAL),
        )
        .stage("attack-eval")
    }

    /// Every stage, then evaluation and timing. The report is persisted
    /// when an output directory is configured.
    pub fn run(&self) -> Result<ExperimentReport> {
        let started = Instant::now();
        let started_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or_default();

        let split = self.split()?;
        let (baseline, baseline_time) = self.baseline()?;
        let (pase, pase_time) = self.pase()?;
        let (pate, pate_time) = self.pate()?;
        self.attack_model()?;

        let (utility, generalization) = (|| {
            let test = &split.target_test;
            let train_acc = baseline.evaluate(&split.target_train)?;
            let utility = Triple {
                baseline: baseline.evaluate(test)?,
                pase: pase.evaluate(test)?,
                pate: pate.student.evaluate(test)?,
            };
            let generalization = Generalization {
                baseline_train_accuracy: train_acc,
                baseline_gap: train_acc - utility.baseline,
            };
            Ok((utility, generalization))
        })()
        .stage("evaluate")?;

        let attack_reports = Triple {
            baseline: self.attack_report(Defense::Baseline)?,
            pase: self.attack_report(Defense::Pase)?,
            pate: self.attack_report(Defense::Pate)?,
        };

        let (train_time_ratio, inference) = (|| {
            let ratio = measure_training_ratio(&TrainTimings {
                baseline: baseline_time,
                pase: pase_time,
                pate: pate_time,
            })?;
            let reps = self.cfg.timing.repetitions;
            let test = &split.target_test;
            let predictors: [&dyn Predictor; 3] = [baseline, pase, &pate.student];
            let [b, p, s] = predictors.map(|pr| measure_inference_time(pr, test, reps));
            Ok((
                ratio,
                Triple {
                    baseline: b?,
                    pase: p?,
                    pate: s?,
                },
            ))
        })()
        .stage("timing")?;

        let report = ExperimentReport {
            name: self.cfg.name.clone(),
            config_hash: self.cfg.hash(),
            config: self.cfg.clone(),
            sizes: SplitSizes {
                target_train: split.target_train.len(),
                target_test: split.target_test.len(),
                attack_pool: split.attack_pool.len(),
            },
            architecture: self.dims()?,
            utility,
            generalization,
            attack: attack_reports,
            train_seconds: Triple {
                baseline: baseline_time.as_secs_f64(),
                pase: pase_time.as_secs_f64(),
                pate: pate_time.as_secs_f64(),
            },
            train_time_ratio,
            inference_ms_per_sample: Triple {
                baseline: inference.baseline.ms_per_sample,
                pase: inference.pase.ms_per_sample,
                pate: inference.pate.ms_per_sample,
            },
            inference_repetitions_ms: Triple {
                baseline: inference.baseline.repetitions_ms_per_sample,
                pase: inference.pase.repetitions_ms_per_sample,
                pate: inference.pate.repetitions_ms_per_sample,
            },
            metadata: RunMetadata {
                started_unix_ms,
                wall_seconds: started.elapsed().as_secs_f64(),
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        };
        self.save("report.json", &report).stage("report")?;
        Ok(report)
    }
}

/// Run the whole pipeline for `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    Pipeline::new(cfg.clone())?.run()
}
