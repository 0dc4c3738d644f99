mod common;

use common::statevector;
use detkit::circuit::{Circuit, Instruction};
use detkit::detectors::analyze;
use detkit::pauli::{Gate, MeasureOutcome, PauliKind, PauliString, SymbolSet, SymbolicSign, Tableau};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ps(s: &str) -> PauliString {
    PauliString::parse_dense(s).unwrap()
}

fn sym(terms: &[usize]) -> SymbolicSign {
    SymbolicSign {
        constant: false,
        measurement_terms: SymbolSet::from_indices(terms.iter().copied()),
        hidden_terms: SymbolSet::new(),
    }
}

type M2 = [[Complex64; 2]; 2];

fn matrix(k: PauliKind) -> M2 {
    let (o, l, i) = (
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
    );
    match k {
        PauliKind::I => [[l, o], [o, l]],
        PauliKind::X => [[o, l], [l, o]],
        PauliKind::Y => [[o, -i], [i, o]],
        PauliKind::Z => [[l, o], [o, -l]],
    }
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for s in 0..2 {
            for k in 0..2 {
                c[r][s] += a[r][k] * b[k][s];
            }
        }
    }
    c
}

/// Commutation of tensor products from explicit 2x2 matrices: each site
/// either commutes or anticommutes, and the signs multiply.
fn commutes_by_matrices(a: &PauliString, b: &PauliString) -> bool {
    let mut sign = 1;
    for q in 0..a.n() {
        let (ma, mb) = (matrix(a.get(q)), matrix(b.get(q)));
        let (ab, ba) = (mul(&ma, &mb), mul(&mb, &ma));
        if (ab[0][0] + ba[0][0]).norm() < 1e-12 && (ab[0][1] + ba[0][1]).norm() < 1e-12 && (ab[1][0] + ba[1][0]).norm() < 1e-12 && (ab[1][1] + ba[1][1]).norm() < 1e-12 {
            sign = -sign;
        }
    }
    sign == 1
}

#[test]
fn commutes_examples() {
    assert!(!ps("Z").commutes(&ps("X")).unwrap());
    assert!(ps("ZZ").commutes(&ps("XX")).unwrap());
    assert_eq!(ps("YX").commutes(&ps("ZZ")).unwrap(), commutes_by_matrices(&ps("YX"), &ps("ZZ")));
    assert!(ps("Z").commutes(&ps("ZZ")).is_err());
}

#[test]
fn commutes_two_qubit_truth_table() {
    let kinds = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];
    for a0 in kinds {
        for a1 in kinds {
            for b0 in kinds {
                for b1 in kinds {
                    let a = PauliString::from_sparse(2, &[(0, a0), (1, a1)]).unwrap();
                    let b = PauliString::from_sparse(2, &[(0, b0), (1, b1)]).unwrap();
                    assert_eq!(a.commutes(&b).unwrap(), commutes_by_matrices(&a, &b), "{a:?} {b:?}");
                }
            }
        }
    }
}

#[test]
fn weights_and_labels() {
    let p = ps("XIYZ");
    assert_eq!(p.weight(), 3);
    assert_eq!(p.x_weight(), 2);
    assert_eq!(p.z_weight(), 2);
    assert_eq!(p.label(), "XIYZ");
    assert_eq!(ps("-XZ").sign.constant, true);
    assert!(PauliString::parse_dense("XQ").is_err());
}

#[test]
fn products_track_phase() {
    // XZ = -iY = i(-Y) and ZX = iY.
    let (p, phase) = ps("X").mul_with_phase(&ps("Z")).unwrap();
    assert_eq!((p.label().as_str(), p.sign.constant, phase), ("Y", true, 1));
    let (p, phase) = ps("Z").mul_with_phase(&ps("X")).unwrap();
    assert_eq!((p.label().as_str(), p.sign.constant, phase), ("Y", false, 1));
    let (p, phase) = ps("XX").mul_with_phase(&ps("ZZ")).unwrap();
    assert_eq!((p.label().as_str(), p.sign.constant, phase), ("YY", true, 0));
}

/// The state <Z1, X2, -X3> (1-based), prepared from |000>.
fn example_tableau() -> Tableau {
    let mut t = Tableau::new(3);
    t.apply_clifford(Gate::H, &[1]).unwrap();
    t.apply_clifford(Gate::X, &[2]).unwrap();
    t.apply_clifford(Gate::H, &[2]).unwrap();
    t
}

#[test]
fn cnot_update_of_example_state() {
    let mut t = example_tableau();
    assert_eq!(t.peek(&ps("ZII")).unwrap(), Some(SymbolicSign::constant(false)));
    assert_eq!(t.peek(&ps("IXI")).unwrap(), Some(SymbolicSign::constant(false)));
    assert_eq!(t.peek(&ps("IIX")).unwrap(), Some(SymbolicSign::constant(true)));
    t.apply_clifford(Gate::Cnot, &[1, 0]).unwrap();
    assert_eq!(t.peek(&ps("ZZI")).unwrap(), Some(SymbolicSign::constant(false)));
    assert_eq!(t.peek(&ps("XXI")).unwrap(), Some(SymbolicSign::constant(false)));
    assert_eq!(t.peek(&ps("IIX")).unwrap(), Some(SymbolicSign::constant(true)));
    assert_eq!(t.peek(&ps("ZII")).unwrap(), None);
    assert!(t.is_valid());
}

#[test]
fn single_qubit_conjugations() {
    let mut t = Tableau::new(1);
    t.apply_clifford(Gate::H, &[0]).unwrap();
    assert_eq!(t.peek(&ps("X")).unwrap(), Some(SymbolicSign::constant(false)));
    t.apply_clifford(Gate::S, &[0]).unwrap();
    assert_eq!(t.peek(&ps("Y")).unwrap(), Some(SymbolicSign::constant(false)));
    let mut p = ps("X");
    p.conjugate_by(Gate::S, &[0]);
    assert_eq!(p.label(), "Y");
    assert!(!p.sign.constant);
    p.conjugate_by(Gate::S, &[0]);
    assert_eq!(p.label(), "X");
    assert!(p.sign.constant);
    assert!(t.apply_clifford(Gate::Cnot, &[0, 0]).is_err());
    assert!(t.apply_clifford(Gate::H, &[3]).is_err());
}

#[test]
fn measurement_signs_of_example_circuit() {
    let mut t = example_tableau();
    t.apply_clifford(Gate::Cnot, &[1, 0]).unwrap();
    assert_eq!(t.measure(&ps("ZII"), 1).unwrap(), MeasureOutcome::Random);
    assert_eq!(t.peek(&ps("IZI")).unwrap(), Some(sym(&[1])));
    assert_eq!(t.peek(&ps("IIX")).unwrap(), Some(SymbolicSign::constant(true)));
    t.apply_clifford(Gate::Cnot, &[2, 1]).unwrap();
    assert_eq!(t.peek(&ps("IXX")).unwrap(), Some(SymbolicSign::constant(true)));
    assert_eq!(t.peek(&ps("IZZ")).unwrap(), Some(sym(&[1])));
    assert_eq!(t.measure(&ps("IZI"), 2).unwrap(), MeasureOutcome::Random);
    assert_eq!(t.measure(&ps("IIZ"), 3).unwrap(), MeasureOutcome::Deterministic(sym(&[1, 2])));
    // Re-measuring returns the same form.
    assert_eq!(t.measure(&ps("IIZ"), 4).unwrap(), MeasureOutcome::Deterministic(sym(&[1, 2])));
    assert!(t.is_valid());
}

#[test]
fn fresh_qubit_measures_zero() {
    let mut t = Tableau::new(2);
    assert_eq!(
        t.measure(&ps("IZ"), 1).unwrap(),
        MeasureOutcome::Deterministic(SymbolicSign::constant(false))
    );
    t.apply_clifford(Gate::H, &[1]).unwrap();
    t.reset(1).unwrap();
    assert_eq!(t.peek(&ps("IZ")).unwrap(), Some(SymbolicSign::constant(false)));
}

#[test]
fn symbolic_sign_evaluation() {
    let s = sym(&[1, 3]);
    assert_eq!(s.evaluate(&[true, false, false]), Some(true));
    assert_eq!(s.evaluate(&[true, false, true]), Some(false));
    assert_eq!(SymbolicSign::constant(true).evaluate(&[]), Some(true));
    assert_eq!(s.evaluate(&[true]), None);
}

fn apply_random_step(t: &mut Tableau, rng: &mut ChaCha8Rng, n: usize, meas: &mut usize) {
    let inst = common::random_instruction(rng, n, false);
    match inst {
        Instruction::Gate { gate, targets } => t.apply_clifford(gate, &targets).unwrap(),
        Instruction::Reset { targets } => t.reset(targets[0]).unwrap(),
        other => {
            for p in other.measured_operators(n) {
                *meas += 1;
                t.measure_and_bind(&p, *meas).unwrap();
            }
        }
    }
}

/// Runs `c` through the tableau and the statevector; determinism verdicts
/// must agree, and every derived detector must hold on the sampled record.
fn check_against_statevector(c: &Circuit, seed: u64) -> Result<(), TestCaseError> {
    let analysis = analyze(c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4 {
        let rec = statevector::run(c, &[], &mut rng);
        prop_assert_eq!(&rec.deterministic, &analysis.deterministic);
        let outcomes = detkit::gf2::BitVec::from_bools(&rec.outcomes);
        prop_assert!(analysis.detectors.evaluate(&outcomes).is_zero());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn tableau_invariants_hold(seed in any::<u64>(), n in 1usize..=5, steps in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tableau::new(n);
        let mut meas = 0;
        for _ in 0..steps {
            apply_random_step(&mut t, &mut rng, n, &mut meas);
            prop_assert!(t.is_valid());
        }
    }

    #[test]
    fn deterministic_measurement_is_idempotent(seed in any::<u64>(), n in 1usize..=4, steps in 0usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tableau::new(n);
        let mut meas = 0;
        for _ in 0..steps {
            apply_random_step(&mut t, &mut rng, n, &mut meas);
        }
        let p = PauliString::single(n, 0, PauliKind::Z);
        let first = t.measure(&p, meas + 1).unwrap();
        let second = t.measure(&p, meas + 2).unwrap();
        match first {
            MeasureOutcome::Deterministic(s) => prop_assert_eq!(second, MeasureOutcome::Deterministic(s)),
            MeasureOutcome::Random => prop_assert_eq!(second, MeasureOutcome::Deterministic(sym(&[meas + 1]))),
        }
    }

    #[test]
    fn determinism_matches_statevector(seed in any::<u64>(), n in 1usize..=4, len in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_circuit(&mut rng, n, len, false);
        check_against_statevector(&c, seed ^ 0x5eed)?;
    }
}
