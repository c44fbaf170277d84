mod common;

use common::{data_with_duplicates, switching_violations};
use pase_core::data::find_duplicates;
use pase_core::nn::TrainConfig;
use pase_core::switch::{assign_folds, build_pase};

#[test]
fn every_training_sample_is_answered_by_a_model_that_never_saw_it() {
    for k in [2, 3, 5] {
        for seed in [1, 2] {
            let (n, bad) = switching_violations(800, k, seed);
            assert_eq!(bad, 0, "k={k} seed={seed}: {bad}/{n} violations");
        }
    }
}

#[test]
fn duplicates_never_straddle_folds() {
    let data = data_with_duplicates(400, 3, 2, 9);
    let dups = find_duplicates(&data);
    assert!(dups.largest_group() > 1, "fixture should contain duplicates");
    let folds = assign_folds(&data, 4, 3, &dups).unwrap();
    for group in dups.members() {
        let f = folds.fold_of(group[0]).unwrap();
        assert!(group.iter().all(|&id| folds.fold_of(id) == Some(f)));
    }
}

#[test]
fn member_training_sets_cover_everything_else() {
    let data = data_with_duplicates(300, 4, 3, 5);
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let ens = build_pase(&data, 3, &[4], &cfg, 17).unwrap();
    for j in 0..3 {
        let ids = ens.member_training_ids(j);
        let expected: Vec<u64> = data
            .ids()
            .iter()
            .copied()
            .filter(|&id| ens.folds().fold_of(id) != Some(j))
            .collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        let mut exp = expected;
        exp.sort_unstable();
        assert_eq!(sorted, exp);
    }
}
