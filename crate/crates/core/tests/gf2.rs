mod common;

use common::{d1, d2, h1, h2, omega1};
use detkit::gf2::{kernel_basis, multiply, rank, sparsify_rows, BitMatrix, BitVec, Gf2Error};
use proptest::prelude::*;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = BitMatrix> {
    (0..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), c), r).prop_map(
            move |rows| {
                let vs: Vec<BitVec> = rows.iter().map(|b| BitVec::from_bools(b)).collect();
                BitMatrix::from_rows(c, &vs).unwrap()
            },
        )
    })
}

fn brute_kernel_size(m: &BitMatrix) -> usize {
    (0u64..1 << m.cols())
        .filter(|&x| {
            let bits: Vec<bool> = (0..m.cols()).map(|i| (x >> i) & 1 == 1).collect();
            m.mul_vec(&BitVec::from_bools(&bits)).unwrap().is_zero()
        })
        .count()
}

/// Rank by counting the distinct vectors in the row span.
fn brute_rank(m: &BitMatrix) -> usize {
    let mut span = std::collections::HashSet::new();
    for mask in 0u64..1 << m.rows() {
        let mut v = BitVec::zeros(m.cols());
        for r in 0..m.rows() {
            if (mask >> r) & 1 == 1 {
                v.xor_assign(&m.row(r));
            }
        }
        span.insert(v);
    }
    span.len().trailing_zeros() as usize
}

#[test]
fn rank_examples() {
    assert_eq!(rank(&d1()), 4);
    assert_eq!(rank(&BitMatrix::zeros(3, 5)), 0);
    assert_eq!(rank(&omega1()), 5);
    assert_eq!(brute_rank(&omega1()), 5);
}

#[test]
fn multiply_examples() {
    assert_eq!(multiply(&d1(), &omega1()).unwrap(), h1());
    assert_eq!(multiply(&d2(), &omega1()).unwrap(), h2());
    assert_eq!(multiply(&BitMatrix::identity(5), &omega1()).unwrap(), omega1());
    assert!(matches!(
        multiply(&omega1(), &d1()),
        Err(Gf2Error::Dimension(_))
    ));
}

#[test]
fn out_of_range_access_is_an_error() {
    let m = BitMatrix::zeros(2, 3);
    assert!(m.get(1, 2).is_ok());
    assert!(matches!(m.get(2, 0), Err(Gf2Error::OutOfRange { .. })));
    assert!(matches!(m.get(0, 3), Err(Gf2Error::OutOfRange { .. })));
}

#[test]
fn kernel_examples() {
    let k = kernel_basis(&d1());
    assert_eq!(k.rows(), 1);
    assert_eq!(brute_kernel_size(&d1()), 2);
    assert_eq!(kernel_basis(&BitMatrix::identity(6)).rows(), 0);
    // Equal row spaces have equal kernels.
    let k2 = kernel_basis(&d2());
    assert!(k.same_row_space(&k2));
    for r in 0..k.rows() {
        assert!(d2().mul_vec(&k.row(r)).unwrap().is_zero());
    }
}

#[test]
fn sparsify_examples() {
    let s = sparsify_rows(&h1());
    assert!(s.count_ones() <= 12, "popcount {}", s.count_ones());
    assert_eq!(h1().count_ones(), 14);
    assert_eq!(s, h2());
    assert_eq!(h2().count_ones(), 12);
    assert!(s.same_row_space(&h1()));
    let single = BitMatrix::from_strs(&["0010"]);
    assert_eq!(sparsify_rows(&single), single);
}

#[test]
fn sparsify_preserves_row_space_on_random_matrices() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let m = common::random_matrix(&mut rng, 6, 10);
        let s = sparsify_rows(&m);
        assert!(s.same_row_space(&m));
        assert!(s.count_ones() <= m.count_ones());
    }
}

#[test]
fn bitvec_basics() {
    let v = BitVec::from_str01("10110");
    assert_eq!(v.ones(), vec![0, 2, 3]);
    assert_eq!(v.count_ones(), 3);
    assert_eq!(v.last_one(), Some(3));
    assert_eq!(v.xor(&v), BitVec::zeros(5));
    assert!(v.dot(&BitVec::from_str01("10000")));
    assert_eq!(BitVec::from_indices(5, &[0, 2, 3]), v);
}

proptest! {
    #[test]
    fn rank_is_bounded_and_matches_brute_force(m in matrix(8, 9)) {
        let r = rank(&m);
        prop_assert!(r <= m.rows().min(m.cols()));
        prop_assert_eq!(r, brute_rank(&m));
    }

    #[test]
    fn kernel_rank_nullity(m in matrix(7, 10)) {
        let k = kernel_basis(&m);
        for r in 0..k.rows() {
            prop_assert!(m.mul_vec(&k.row(r)).unwrap().is_zero());
        }
        prop_assert_eq!(rank(&m) + k.rows(), m.cols());
        prop_assert_eq!(rank(&k), k.rows());
        prop_assert_eq!(1usize << k.rows(), brute_kernel_size(&m));
    }

    #[test]
    fn multiply_is_associative(seed in any::<u64>(), a in 1usize..7, b in 1usize..7, c in 1usize..7, d in 1usize..7) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = common::random_matrix(&mut rng, a, b);
        let y = common::random_matrix(&mut rng, b, c);
        let z = common::random_matrix(&mut rng, c, d);
        let left = x.multiply(&y).unwrap().multiply(&z).unwrap();
        let right = x.multiply(&y.multiply(&z).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn multiply_matches_entrywise_definition(seed in any::<u64>(), a in 1usize..6, b in 1usize..70, c in 1usize..6) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = common::random_matrix(&mut rng, a, b);
        let y = common::random_matrix(&mut rng, b, c);
        let p = x.multiply(&y).unwrap();
        for i in 0..a {
            for j in 0..c {
                let e = (0..b).filter(|&k| x.bit(i, k) && y.bit(k, j)).count() % 2 == 1;
                prop_assert_eq!(p.bit(i, j), e);
            }
        }
    }

    #[test]
    fn transpose_is_an_involution(m in matrix(8, 80)) {
        let t = m.transpose();
        prop_assert_eq!(t.rows(), m.cols());
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                prop_assert_eq!(t.bit(c, r), m.bit(r, c));
            }
        }
        prop_assert_eq!(t.transpose(), m);
    }

    #[test]
    fn sparsify_keeps_rank_and_never_adds_weight(m in matrix(8, 12)) {
        let s = sparsify_rows(&m);
        prop_assert_eq!(rank(&s), rank(&m));
        prop_assert!(s.same_row_space(&m));
        prop_assert!(s.count_ones() <= m.count_ones());
    }
}
