//! Independent reference implementations shared by the integration tests
//! and the acceptance suite. Nothing here calls into the code it checks
//! beyond reading parameters and asking for answers.

#![allow(dead_code)]

use pase_core::data::{find_duplicates, Dataset};
use pase_core::nn::{MlpModel, TrainConfig};
use pase_core::rng::SplitMix64;
use pase_core::switch::{assign_folds, train_pase, BruteForceL2, NearestIndex};

/// Naive double loop: smallest squared distance, lowest id on ties.
pub fn naive_nearest(features: &[f64], ids: &[u64], dim: usize, q: &[f64]) -> (u64, f64) {
    let mut best: Option<(u64, f64)> = None;
    for (row, &id) in features.chunks_exact(dim).zip(ids) {
        let mut d = 0.0;
        for j in 0..dim {
            let diff = row[j] - q[j];
            d += diff * diff;
        }
        best = match best {
            None => Some((id, d)),
            Some((bid, bd)) if d < bd || (d == bd && id < bid) => Some((id, d)),
            keep => keep,
        };
    }
    best.expect("non-empty")
}

/// Mean cross-entropy computed from scratch, plus the smallest absolute
/// hidden pre-activation (how close the instance sits to a ReLU kink).
pub fn oracle_loss(model: &MlpModel, xs: &[f64], ys: &[usize]) -> (f64, f64) {
    let dims = model.layer_dims();
    let layers = dims.len() - 1;
    let mut total = 0.0;
    let mut closest_kink = f64::INFINITY;
    for (x, &y) in xs.chunks_exact(dims[0]).zip(ys) {
        let mut a = x.to_vec();
        for l in 0..layers {
            let w = &model.weights()[l];
            let b = &model.biases()[l];
            let mut z = vec![0.0; dims[l + 1]];
            for o in 0..dims[l + 1] {
                z[o] = b[o];
                for i in 0..dims[l] {
                    z[o] += w[o * dims[l] + i] * a[i];
                }
            }
            if l + 1 < layers {
                for v in &mut z {
                    closest_kink = closest_kink.min(v.abs());
                    *v = v.max(0.0);
                }
            }
            a = z;
        }
        // log-softmax via log-sum-exp
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - a[y];
    }
    (total / ys.len() as f64, closest_kink)
}

/// One random small network with a random batch, kept away from ReLU kinks
/// so central differences are meaningful.
pub struct GradInstance {
    pub model: MlpModel,
    pub xs: Vec<f64>,
    pub ys: Vec<usize>,
}

pub fn random_grad_instance(rng: &mut SplitMix64) -> GradInstance {
    loop {
        let input = 1 + rng.below(8);
        let hidden_layers = rng.below(3);
        let mut dims = vec![input];
        for _ in 0..hidden_layers {
            dims.push(1 + rng.below(8));
        }
        dims.push(2 + rng.below(7));
        let mut model = MlpModel::init(&dims, rng.next_u64()).unwrap();
        for b in model.biases_mut() {
            for v in b.iter_mut() {
                *v = rng.uniform(-0.5, 0.5);
            }
        }
        let batch = 1 + rng.below(4);
        let xs: Vec<f64> = (0..batch * input).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let ys: Vec<usize> = (0..batch).map(|_| rng.below(*dims.last().unwrap())).collect();
        let (_, kink) = oracle_loss(&model, &xs, &ys);
        if kink > 1e-3 {
            return GradInstance { model, xs, ys };
        }
    }
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter. The denominator is floored at 1e-6 so
/// parameters with vanishing gradient compare absolutely.
pub fn max_gradient_error(inst: &GradInstance, h: f64) -> f64 {
    let (_, grads) = inst.model.loss_and_grad(&inst.xs, &inst.ys).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = inst.model.clone();
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    for l in 0..grads.weights.len() {
        for i in 0..grads.weights[l].len() {
            let orig = probe.weights()[l][i];
            probe.weights_mut()[l][i] = orig + h;
            let (up, _) = oracle_loss(&probe, &inst.xs, &inst.ys);
            probe.weights_mut()[l][i] = orig - h;
            let (down, _) = oracle_loss(&probe, &inst.xs, &inst.ys);
            probe.weights_mut()[l][i] = orig;
            worst = worst.max(rel(grads.weights[l][i], (up - down) / (2.0 * h)));
        }
        for i in 0..grads.biases[l].len() {
            let orig = probe.biases()[l][i];
            probe.biases_mut()[l][i] = orig + h;
            let (up, _) = oracle_loss(&probe, &inst.xs, &inst.ys);
            probe.biases_mut()[l][i] = orig - h;
            let (down, _) = oracle_loss(&probe, &inst.xs, &inst.ys);
            probe.biases_mut()[l][i] = orig;
            worst = worst.max(rel(grads.biases[l][i], (up - down) / (2.0 * h)));
        }
    }
    worst
}

/// Random point cloud; about a third of datasets live on a coarse integer
/// grid so exact distance ties and duplicate points are common.
/// Also returns whether the grid was used.
pub fn random_cloud(rng: &mut SplitMix64, n: usize, dim: usize) -> (Vec<f64>, Vec<u64>, bool) {
    let grid = rng.below(3) == 0;
    let features: Vec<f64> = (0..n * dim)
        .map(|_| {
            if grid {
                rng.below(3) as f64 - 1.0
            } else {
                rng.normal() * 10.0
            }
        })
        .collect();
    // Ids deliberately out of positional order.
    let mut ids: Vec<u64> = (0..n as u64).map(|i| i * 7 + 3).collect();
    rng.shuffle(&mut ids);
    (features, ids, grid)
}

/// Runs `queries` nearest-neighbour lookups against the naive scan and
/// returns how many disagreed (id or bitwise distance).
pub fn nearest_mismatches(seed: u64, datasets: usize, queries_per: usize) -> (usize, usize) {
    let mut rng = SplitMix64::new(seed);
    let mut total = 0;
    let mut bad = 0;
    for _ in 0..datasets {
        let n = 1 + rng.below(500);
        let dim = 1 + rng.below(64);
        let (features, ids, grid) = random_cloud(&mut rng, n, dim);
        let index = BruteForceL2::from_raw(features.clone(), ids.clone(), dim).unwrap();
        for _ in 0..queries_per {
            let q: Vec<f64> = if rng.below(2) == 0 {
                let p = rng.below(n);
                features[p * dim..(p + 1) * dim].to_vec()
            } else if grid {
                (0..dim).map(|_| rng.below(3) as f64 - 1.0).collect()
            } else {
                (0..dim).map(|_| rng.normal() * 10.0).collect()
            };
            let got = index.nearest(&q).unwrap();
            let (id, dist) = naive_nearest(&features, &ids, dim, &q);
            total += 1;
            if got.id != id || got.squared_distance.to_bits() != dist.to_bits() {
                bad += 1;
            }
        }
    }
    (total, bad)
}

/// Blob-like data where roughly a fifth of the rows are exact copies of
/// other rows.
pub fn data_with_duplicates(n: usize, dim: usize, classes: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let mut features = Vec::with_capacity(n * dim);
    for i in 0..n {
        if i > 0 && rng.below(5) == 0 {
            let src = rng.below(i);
            let row = features[src * dim..(src + 1) * dim].to_vec();
            features.extend(row);
        } else {
            features.extend((0..dim).map(|_| rng.normal()));
        }
    }
    let labels = (0..n).map(|_| rng.below(classes)).collect();
    Dataset::with_sequential_ids(features, dim, labels, classes).unwrap()
}

/// Queries every training sample against a freshly trained ensemble and
/// counts those routed to a member that trained on them.
pub fn switching_violations(n: usize, k: usize, seed: u64) -> (usize, usize) {
    let train = data_with_duplicates(n, 6, 3, seed);
    let folds = assign_folds(&train, k, seed, &find_duplicates(&train)).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 64,
        ..TrainConfig::default()
    };
    let ens = train_pase(&train, &folds, &[8], &cfg).unwrap();
    let mut bad = 0;
    for (x, &id) in train.rows().zip(train.ids()) {
        let j = ens.select_model(x).unwrap();
        if ens.member_training_ids(j).contains(&id) {
            bad += 1;
        }
    }
    (train.len(), bad)
}
