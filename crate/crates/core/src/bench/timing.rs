use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::report::Triple;
use crate::data::Dataset;
use crate::error::{PaseError, Result};
use crate::predict::Predictor;

/// Wall-clock training time of each defense.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainTimings {
    pub baseline: Duration,
    pub pase: Duration,
    pub pate: Duration,
}

/// Each defense's training time divided by the baseline's.
pub fn measure_training_ratio(t: &TrainTimings) -> Result<Triple<f64>> {
    let base = t.baseline.as_secs_f64();
    if base <= 0.0 {
        return Err(PaseError::Input("baseline training time must be positive".into()));
    }
    Ok(Triple {
        baseline: 1.0,
        pase: t.pase.as_secs_f64() / base,
        pate: t.pate.as_secs_f64() / base,
    })
}

/// Time `f` once.
pub fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTiming {
    /// Median over repetitions.
    pub ms_per_sample: f64,
    pub repetitions_ms_per_sample: Vec<f64>,
}

impl InferenceTiming {
    /// Largest over smallest repetition.
    pub fn spread(&self) -> f64 {
        let max = self.repetitions_ms_per_sample.iter().copied().fold(f64::MIN, f64::max);
        let min = self.repetitions_ms_per_sample.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Shortest wall time a single timed repetition should cover; shorter
/// windows are dominated by scheduler noise.
const MIN_REPETITION: Duration = Duration::from_millis(200);

/// Median per-sample latency over `repetitions` timed repetitions on
/// `test`, after one untimed warm-up pass. A repetition runs over the test
/// set as many times as needed to last at least [`MIN_REPETITION`] (the
/// count is calibrated from the warm-up and then fixed).
pub fn measure_inference_time(
    predictor: &dyn Predictor,
    test: &Dataset,
    repetitions: usize,
) -> Result<InferenceTiming> {
    if repetitions < 3 {
        return Err(PaseError::Config(format!(
            "need at least 3 repetitions, got {repetitions}"
        )));
    }
    if test.is_empty() {
        return Err(PaseError::Input("empty test set".into()));
    }
    let pass = || -> Result<f64> {
        let mut sink = 0.0;
        for x in test.rows() {
            sink += std::hint::black_box(predictor.predict(x)?)[0];
        }
        Ok(sink)
    };
    let (_, warm) = timed(pass)?;
    let passes = (MIN_REPETITION.as_secs_f64() / warm.as_secs_f64().max(1e-9))
        .ceil()
        .clamp(1.0, 1000.0) as usize;
    let mut per_rep = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let (sink, elapsed) = timed(|| (0..passes).map(|_| pass()).sum::<Result<f64>>())?;
        std::hint::black_box(sink);
        per_rep.push(elapsed.as_secs_f64() * 1e3 / (passes * test.len()) as f64);
    }
    Ok(InferenceTiming {
        ms_per_sample: median(&per_rep),
        repetitions_ms_per_sample: per_rep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_blobs;
    use crate::predict::FnPredictor;

    #[test]
    fn ratio_against_baseline() {
        let r = measure_training_ratio(&TrainTimings {
            baseline: Duration::from_secs(10),
            pase: Duration::from_secs(32),
            pate: Duration::from_secs(14),
        })
        .unwrap();
        assert_eq!(r.baseline, 1.0);
        assert!((r.pase - 3.2).abs() < 1e-12);
        assert!((r.pate - 1.4).abs() < 1e-12);
    }

    #[test]
    fn zero_baseline_rejected() {
        let t = TrainTimings {
            baseline: Duration::ZERO,
            pase: Duration::from_secs(1),
            pate: Duration::from_secs(1),
        };
        assert!(measure_training_ratio(&t).is_err());
    }

    #[test]
    fn identical_workloads_ratio_near_one() {
        let work = || -> Result<f64> { Ok((0..2_000_000).map(|i| std::hint::black_box(i as f64).sqrt()).sum()) };
        timed(work).unwrap();
        let (_, a) = timed(work).unwrap();
        let (_, b) = timed(work).unwrap();
        let r = measure_training_ratio(&TrainTimings {
            baseline: a,
            pase: b,
            pate: a,
        })
        .unwrap();
        assert!(r.pase > 0.25 && r.pase < 4.0, "ratio {}", r.pase);
    }

    #[test]
    fn constant_predictor_timing() {
        let d = gen_blobs(2, 500, 4, 1.0, 0).unwrap();
        let p = FnPredictor::new(4, 2, |_: &[f64]| Ok(vec![0.5, 0.5]));
        let t = measure_inference_time(&p, &d, 3).unwrap();
        assert!(t.ms_per_sample > 0.0);
        assert_eq!(t.repetitions_ms_per_sample.len(), 3);
        assert!(measure_inference_time(&p, &d, 2).is_err());
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
