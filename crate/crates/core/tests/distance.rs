mod common;

use common::{combinations, d1, d2, omega1};
use detkit::circuit::parse;
use detkit::dem::DetectorErrorModel;
use detkit::distance::{circuit_distance, is_undetected_logical, min_undetected_weight, DistanceError};
use detkit::gf2::BitMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Naive search: first subset by weight then lexicographic order.
fn naive_distance(dem: &DetectorErrorModel, max_w: usize, require: bool) -> Option<(usize, Vec<usize>)> {
    for w in 1..=max_w.min(dem.num_errors()) {
        for s in combinations(dem.num_errors(), w) {
            let (h, l) = dem.syndrome_of(&s);
            if h.is_zero() && (!require || !l.is_zero()) {
                return Some((w, s));
            }
        }
    }
    None
}

#[test]
fn combinations_are_lexicographic() {
    assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    assert_eq!(combinations(12, 4).len(), 495);
}

#[test]
fn memory_circuit_has_distance_three() {
    let dem = DetectorErrorModel::from_circuit(&common::circuit("repcode_memory.qc")).unwrap();
    let w = circuit_distance(&dem, 5).unwrap().unwrap();
    assert_eq!(w.weight, 3);
    assert_eq!(w.columns, vec![0, 1, 2]);
    assert!(is_undetected_logical(&dem, &w.columns));
    // Second-round data errors, the last flip and the final readout error.
    assert!(is_undetected_logical(&dem, &[6, 7, 8, 10]));
    assert!(!is_undetected_logical(&dem, &[0, 1]));
    assert_eq!(circuit_distance(&dem, 2).unwrap(), None);
    assert_eq!(circuit_distance(&dem, 5).unwrap(), circuit_distance(&dem.merge_equivalent(), 5).unwrap());
}

#[test]
fn distance_is_basis_invariant_on_example() {
    let l = BitMatrix::from_strs(&["00000111"]);
    let a = DetectorErrorModel::from_matrices(d1().multiply(&omega1()).unwrap(), l.clone(), vec![0.01; 8]).unwrap();
    let b = DetectorErrorModel::from_matrices(d2().multiply(&omega1()).unwrap(), l, vec![0.01; 8]).unwrap();
    assert_eq!(circuit_distance(&a, 8).unwrap(), circuit_distance(&b, 8).unwrap());
    assert_eq!(min_undetected_weight(&a, 8, false), min_undetected_weight(&b, 8, false));
}

#[test]
fn trivial_cases() {
    let noiseless = DetectorErrorModel::from_circuit(&common::circuit("repcode_memory.qc").without_noise()).unwrap();
    assert_eq!(circuit_distance(&noiseless, 10).unwrap(), None);
    let full_rank = DetectorErrorModel::from_matrices(BitMatrix::identity(3), BitMatrix::from_strs(&["111"]), vec![0.1; 3]).unwrap();
    assert_eq!(circuit_distance(&full_rank, 3).unwrap(), None);
    let no_obs = DetectorErrorModel::from_matrices(BitMatrix::identity(2), BitMatrix::zeros(0, 2), vec![0.1; 2]).unwrap();
    assert_eq!(circuit_distance(&no_obs, 2), Err(DistanceError::NoObservable));
    let single = parse("QUBITS 1\nMZ(0.1) 0\nOBSERVABLE m1\n").unwrap();
    let dem = DetectorErrorModel::from_circuit(&single).unwrap();
    let w = circuit_distance(&dem, 3).unwrap().unwrap();
    assert_eq!((w.weight, w.columns), (1, vec![0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_naive_search(seed in any::<u64>(), d in 1usize..=6, e in 1usize..=12, k in 0usize..=2, require in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = common::random_matrix(&mut rng, d, e);
        let l = common::random_matrix(&mut rng, k, e);
        let dem = DetectorErrorModel::from_matrices(h, l, vec![0.01; e]).unwrap();
        let max_w = rng.random_range(1..=e);
        let got = min_undetected_weight(&dem, max_w, require).map(|w| (w.weight, w.columns));
        prop_assert_eq!(got, naive_distance(&dem, max_w, require));
    }

    #[test]
    fn invariant_under_detector_basis_change(seed in any::<u64>(), d in 1usize..=6, e in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = common::random_matrix(&mut rng, d, e);
        let l = common::random_matrix(&mut rng, 1, e);
        let mut t = BitMatrix::identity(d);
        for _ in 0..3 * d {
            let (a, b) = (rng.random_range(0..d), rng.random_range(0..d));
            if a != b {
                t.xor_row_into(a, b);
            }
        }
        let a = DetectorErrorModel::from_matrices(h.clone(), l.clone(), vec![0.01; e]).unwrap();
        let b = DetectorErrorModel::from_matrices(t.multiply(&h).unwrap(), l, vec![0.01; e]).unwrap();
        let wa = circuit_distance(&a, e).unwrap().map(|w| w.weight);
        let wb = circuit_distance(&b, e).unwrap().map(|w| w.weight);
        prop_assert_eq!(wa, wb);
    }
}
