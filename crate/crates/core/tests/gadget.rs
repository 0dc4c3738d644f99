mod common;

use std::collections::BTreeMap;

use detkit::dem::DetectorErrorModel;
use detkit::distance::is_undetected_logical;
use detkit::gadget::{
    build_gadget_dem, component_count, gadget_distance, Component, ComponentProcedure, GadgetError,
    GadgetErrorKind, ProcedureKind,
};
use detkit::gf2::BitMatrix;

const KINDS: [ProcedureKind; 2] = [ProcedureKind::Agp, ProcedureKind::Qed];

fn dem(kind: ProcedureKind, d: usize) -> DetectorErrorModel {
    build_gadget_dem(&ComponentProcedure::new(kind, d).unwrap()).unwrap()
}

#[test]
fn distance_equals_d() {
    for kind in KINDS {
        for d in [1, 3, 5, 7] {
            let w = gadget_distance(&dem(kind, d), d).unwrap();
            assert_eq!(w.weight, d, "{kind:?} d={d}");
        }
    }
}

#[test]
fn agp_d3_model() {
    let m = dem(ProcedureKind::Agp, 3);
    assert_eq!(m.num_detectors(), 2);
    assert_eq!(m.num_errors(), 6);
    assert_eq!(m.h, BitMatrix::from_strs(&["111100", "001111"]));
    assert_eq!(m.l, BitMatrix::from_strs(&["000011"]));
    assert_eq!(gadget_distance(&m, 3).unwrap().columns, vec![0, 2, 4]);
}

#[test]
fn qed_d3_detectors() {
    let p = ComponentProcedure::qed(3).unwrap();
    assert_eq!(
        p.sequence,
        vec![Component::Lm, Component::Qed, Component::Lm, Component::Qec, Component::Lm]
    );
    let m = build_gadget_dem(&p).unwrap();
    // Outcome flips are the odd columns; each sees the detectors on its outcome.
    let flip_cols: Vec<usize> = p
        .error_kinds()
        .iter()
        .enumerate()
        .filter(|(_, k)| matches!(k, GadgetErrorKind::Flip { .. }))
        .map(|(j, _)| j)
        .collect();
    let d_of_outcome = m.h.select_columns(&flip_cols);
    let mut sets: Vec<Vec<usize>> = (0..m.num_detectors()).map(|i| d_of_outcome.row(i).ones()).collect();
    sets.sort();
    assert_eq!(sets, vec![vec![0, 2], vec![1], vec![2, 3]]);
    assert_eq!(m.l.select_columns(&flip_cols), BitMatrix::from_strs(&["0001"]));
}

#[test]
fn d1_has_no_detectors() {
    for kind in KINDS {
        let m = dem(kind, 1);
        assert_eq!(m.num_detectors(), 0);
        assert_eq!(gadget_distance(&m, 1).unwrap().weight, 1);
    }
}

#[test]
fn final_detector_is_necessary() {
    for kind in KINDS {
        for d in [3, 5, 7] {
            let m = dem(kind, d);
            let keep: Vec<usize> = (0..m.num_detectors() - 1).collect();
            let cut = DetectorErrorModel::from_matrices(m.h.select_rows(&keep), m.l.clone(), m.priors.clone()).unwrap();
            let w = gadget_distance(&cut, d).unwrap();
            assert!(w.weight < d, "{kind:?} d={d}");
        }
    }
}

#[test]
fn witnesses_are_undetected_logicals() {
    for kind in KINDS {
        for d in [3, 5] {
            let m = dem(kind, d);
            let w = gadget_distance(&m, d).unwrap();
            assert!(is_undetected_logical(&m, &w.columns));
            assert!(w.columns.windows(2).all(|p| p[0] < p[1]));
        }
    }
}

#[test]
fn component_counts() {
    let counts = |pairs: &[(Component, usize)]| pairs.iter().copied().collect::<BTreeMap<_, _>>();
    assert_eq!(
        component_count(ProcedureKind::Agp, 3).unwrap(),
        counts(&[(Component::Lm, 3), (Component::Qec, 2)])
    );
    assert_eq!(
        component_count(ProcedureKind::Qed, 3).unwrap(),
        counts(&[(Component::Lm, 3), (Component::Qec, 1), (Component::Qed, 1)])
    );
    assert_eq!(
        component_count(ProcedureKind::Qed, 5).unwrap(),
        counts(&[(Component::Lm, 5), (Component::Qec, 2), (Component::Qed, 2)])
    );
    assert_eq!(component_count(ProcedureKind::Agp, 4), Err(GadgetError::BadDistance(4)));
    assert!(ComponentProcedure::agp(0).is_err());
}

#[test]
fn sequences_parse_back() {
    for kind in KINDS {
        for d in [1, 3, 5] {
            let p = ComponentProcedure::new(kind, d).unwrap();
            assert_eq!(ComponentProcedure::from_sequence(p.sequence.clone()).unwrap(), p);
        }
    }
    assert!(ComponentProcedure::from_sequence(vec![Component::Lm, Component::Lm]).is_err());
    assert!(ComponentProcedure::from_sequence(vec![Component::Qec]).is_err());
    assert_eq!("AGP".parse::<ProcedureKind>().unwrap(), ProcedureKind::Agp);
    assert!("x".parse::<ProcedureKind>().is_err());
}
