mod common;

use detkit::frames::ErrorClass;
use detkit::gf2::BitVec;
use detkit::schedule::{
    css_parameters, expand_schedule, parse_layout, parse_schedule, verify_ft, verify_ft_with_budget, Basis,
    BucketMember, FtReport, PhenoError, PhenoKind, ScheduleError,
};

fn members(r: &FtReport, m: &BucketMember) -> Vec<PhenoError> {
    m.columns.iter().map(|&c| r.model.errors[r.model.representative[c]]).collect()
}

fn input(qubit: usize, round: usize) -> PhenoError {
    PhenoError {
        class: ErrorClass::Input,
        kind: PhenoKind::Data { qubit, round },
    }
}

fn internal(qubit: usize, round: usize) -> PhenoError {
    PhenoError {
        class: ErrorClass::Internal,
        kind: PhenoKind::Data { qubit, round },
    }
}

#[test]
fn rep3_is_fault_tolerant() {
    let r = verify_ft(&common::schedule("rep3.sched"), 1).unwrap();
    assert!(r.fault_tolerant);
    assert_eq!(r.model.num_columns(), 10);
    assert_eq!(r.model.raw.num_errors(), 12);
    assert_eq!(r.corrections[&BitVec::from_str01("110")], BitVec::from_str01("010"));
    assert_eq!(r.corrections[&BitVec::from_str01("000")], BitVec::from_str01("000"));
    assert!(r.counterexamples.is_empty());
}

#[test]
fn corrections_are_valid_for_every_member() {
    // Recompute each bucket and check the stored correction against it.
    let s = common::schedule("rep3.sched");
    let r = verify_ft(&s, 1).unwrap();
    let group = [BitVec::zeros(3), BitVec::from_str01("111")];
    let min_weight = |v: &BitVec| group.iter().map(|g| v.xor(g).count_ones()).min().unwrap();
    for set in (0..=1).flat_map(|w| common::combinations(r.model.num_columns(), w)) {
        let syn = r.model.syndrome(&set);
        let c = &r.corrections[&syn];
        assert!(min_weight(&c.xor(&r.model.output(&set))) <= r.model.internal_weight(&set), "{set:?}");
    }
}

#[test]
fn naive_rep5_schedule_fails() {
    let r = verify_ft(&common::schedule("rep5_naive.sched"), 2).unwrap();
    assert!(!r.fault_tolerant);
    assert_eq!(r.model.num_columns(), 25);
    let (a, b) = &r.counterexamples[0];
    assert_eq!(members(&r, a), vec![input(0, 1), input(1, 1)]);
    assert_eq!(
        members(&r, b),
        vec![
            internal(2, 2),
            PhenoError {
                class: ErrorClass::Internal,
                kind: PhenoKind::MeasFlip {
                    round: 3,
                    index: 1,
                    measurement: 6
                }
            }
        ]
    );
    assert_eq!(r.model.syndrome(&a.columns), r.model.syndrome(&b.columns));
}

#[test]
fn fixed_rep5_schedules_pass() {
    for name in ["rep5_fix5.sched", "rep5_alt4.sched"] {
        let r = verify_ft(&common::schedule(name), 2).unwrap();
        assert!(r.fault_tolerant, "{name}");
    }
}

#[test]
fn color_code_three_round_schedule_fails() {
    let r = verify_ft(&common::schedule("cc12_3round.sched"), 1).unwrap();
    assert!(!r.fault_tolerant);
    assert_eq!(r.counterexamples.len(), 4);
    let mut pairs: Vec<(PhenoError, PhenoError)> = r
        .counterexamples
        .iter()
        .map(|(a, b)| (members(&r, a)[0], members(&r, b)[0]))
        .collect();
    pairs.sort_by_key(|(a, _)| match a.kind {
        PhenoKind::Data { qubit, .. } => qubit,
        _ => usize::MAX,
    });
    let expect: Vec<(PhenoError, PhenoError)> = (0..4).map(|i| (input(8 + i, 1), internal(4 + i, 2))).collect();
    assert_eq!(pairs, expect);
}

#[test]
fn augmented_color_code_schedule_passes() {
    assert!(verify_ft(&common::schedule("cc12_aug.sched"), 1).unwrap().fault_tolerant);
}

#[test]
fn cycled_schedules_pass_at_t2() {
    for name in ["cc17_cycled.sched", "cc19_cycled.sched"] {
        assert!(verify_ft(&common::schedule(name), 2).unwrap().fault_tolerant, "{name}");
    }
}

#[test]
fn layouts_have_expected_parameters() {
    assert_eq!(common::layout("cc12.code").parameters(4), (12, 2, Some(3)));
    assert_eq!(common::layout("cc17.code").parameters(6), (17, 1, Some(5)));
    assert_eq!(common::layout("cc19.code").parameters(6), (19, 1, Some(5)));
    assert_eq!(common::layout("cc17.code").parameters(4), (17, 1, None));
    let stabs = common::layout("cc12.code").stabilizers();
    assert_eq!(stabs.len(), 10);
    assert!(stabs.iter().all(|a| stabs.iter().all(|b| a.commutes(b).unwrap())));
}

#[test]
fn css_parameters_of_small_codes() {
    let rep = detkit::gf2::BitMatrix::from_strs(&["110", "011"]);
    let empty = detkit::gf2::BitMatrix::zeros(0, 3);
    assert_eq!(css_parameters(&empty, &rep, 3), (3, 1, Some(1)));
}

#[test]
fn dual_schedules_share_verdicts() {
    for (name, t) in [("rep3.sched", 1), ("cc12_3round.sched", 1), ("cc12_aug.sched", 1), ("rep5_naive.sched", 2)] {
        let s = common::schedule(name);
        let d = s.dualize().unwrap();
        assert_eq!(d.basis, Basis::X);
        assert_eq!(d.dualize().unwrap(), s);
        let a = verify_ft(&s, t).unwrap();
        let b = verify_ft(&d, t).unwrap();
        assert_eq!(a.fault_tolerant, b.fault_tolerant, "{name}");
        assert_eq!(a.counterexamples.len(), b.counterexamples.len(), "{name}");
        assert_eq!(a.model.merged.h, b.model.merged.h, "{name}");
    }
}

#[test]
fn dualize_requires_marker() {
    let text = common::fixture_text("rep3.sched").replace("SELF_DUAL\n", "");
    let s = parse_schedule(&text).unwrap();
    assert_eq!(s.dualize(), Err(ScheduleError::NotSelfDual));
}

#[test]
fn schedules_round_trip_through_print() {
    for name in ["rep3.sched", "rep5_naive.sched", "cc12_aug.sched", "cc17_cycled.sched"] {
        let s = common::schedule(name);
        assert_eq!(parse_schedule(&s.print()).unwrap(), s, "{name}");
    }
}

#[test]
fn invalid_schedules_are_rejected() {
    let base = "QUBITS 3\nBASIS Z\nSTABILIZERS\nZ0*Z1\nZ1*Z2\nROUND\n";
    for bad in ["MPP X0*X1\n", "MPP Z0*Z1 Z1*Z2\n", "MPP Z0\n"] {
        let s = parse_schedule(&format!("{base}{bad}"));
        let invalid = match s {
            Err(_) => true,
            Ok(s) => s.validate().is_err() && expand_schedule(&s).is_err(),
        };
        assert!(invalid, "{bad:?}");
    }
    assert!(matches!(parse_schedule("QUBITS 2\nBOGUS\n"), Err(ScheduleError::Parse { line: 2, .. })));
    assert!(parse_layout("0 1 2\n").is_err());
    assert!(parse_layout("qubits 3\n0 1 5\n").is_err());
    let rep3 = common::schedule("rep3.sched");
    assert!(matches!(verify_ft_with_budget(&rep3, 2, 5), Err(ScheduleError::Budget { .. })));
    assert!(verify_ft(&rep3, 0).is_err());
}

#[test]
fn zero_round_schedule() {
    // Without measurements, distinct input errors share the empty syndrome.
    let mut s = common::schedule("rep3.sched");
    s.rounds.clear();
    let r = verify_ft(&s, 1).unwrap();
    assert!(!r.fault_tolerant);
    assert_eq!(r.model.num_columns(), 3);
    assert_eq!(r.model.merged.num_detectors(), 0);
    assert!(r.model.internal.iter().all(|&i| i == 0));
}

#[test]
fn stabilizer_measurements_are_commuting_products() {
    let s = common::schedule("cc17_cycled.sched");
    for p in s.rounds.iter().flatten() {
        for q in &s.code_stabilizers {
            assert!(p.commutes(q).unwrap());
        }
    }
}
