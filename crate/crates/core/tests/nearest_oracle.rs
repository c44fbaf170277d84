mod common;

use common::{naive_nearest, nearest_mismatches};
use pase_core::switch::{BruteForceL2, NearestIndex};

#[test]
fn brute_force_matches_naive_scan() {
    let (total, bad) = nearest_mismatches(0x6e6e, 60, 25);
    assert!(total >= 1000);
    assert_eq!(bad, 0, "{bad} of {total} queries disagreed with the naive scan");
}

#[test]
fn huge_offsets_do_not_break_exactness() {
    // Cached-norm distances lose every significant digit out here; the
    // exact re-score must still separate points 1e-3 apart.
    let base = 1e7;
    let features = vec![base, base, base + 1e-3, base, base, base + 2e-3];
    let ids = vec![10, 4, 7];
    let index = BruteForceL2::from_raw(features.clone(), ids.clone(), 2).unwrap();
    for q in [
        [base, base],
        [base + 1e-3, base],
        [base, base + 1.5e-3],
        [base + 5e-4, base],
    ] {
        let got = index.nearest(&q).unwrap();
        assert_eq!((got.id, got.squared_distance), naive_nearest(&features, &ids, 2, &q));
    }
}
