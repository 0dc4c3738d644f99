//! Component-level logical measurement procedures.
//!
//! A procedure is a sequence of logical measurement (LM), error correction
//! (QEC) and error detection (QED) components. Each component is treated as a
//! black box with one coarse input error and, for LM and QED, one outcome
//! flip. The resulting detector error model is small enough for exhaustive
//! distance search.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dem::DetectorErrorModel;
use crate::distance::{circuit_distance, Witness};
use crate::gf2::BitMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Lm,
    Qec,
    Qed,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Lm => "LM",
            Component::Qec => "QEC",
            Component::Qed => "QED",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcedureKind {
    Agp,
    Qed,
}

impl std::str::FromStr for ProcedureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "agp" => Ok(ProcedureKind::Agp),
            "qed" => Ok(ProcedureKind::Qed),
            other => Err(format!("unknown procedure '{other}' (agp, qed)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("distance must be odd and at least 1, got {0}")]
    BadDistance(usize),
    #[error("malformed sequence: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentProcedure {
    pub sequence: Vec<Component>,
    pub d: usize,
}

/// What a coarse error column stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetErrorKind {
    /// Data error entering component `index`.
    Data { index: usize },
    /// Flipped outcome of LM or QED component `index`.
    Flip { index: usize },
}

fn check_distance(d: usize) -> Result<(), GadgetError> {
    if d == 0 || d % 2 == 0 {
        return Err(GadgetError::BadDistance(d));
    }
    Ok(())
}

impl ComponentProcedure {
    /// LM followed by `d - 1` repetitions of (QEC, LM).
    pub fn agp(d: usize) -> Result<Self, GadgetError> {
        check_distance(d)?;
        let mut sequence = vec![Component::Lm];
        for _ in 1..d {
            sequence.extend([Component::Qec, Component::Lm]);
        }
        Ok(ComponentProcedure { sequence, d })
    }

    /// LM followed by `(d - 1) / 2` repetitions of (QED, LM, QEC, LM).
    pub fn qed(d: usize) -> Result<Self, GadgetError> {
        check_distance(d)?;
        let mut sequence = vec![Component::Lm];
        for _ in 0..(d - 1) / 2 {
            sequence.extend([Component::Qed, Component::Lm, Component::Qec, Component::Lm]);
        }
        Ok(ComponentProcedure { sequence, d })
    }

    pub fn new(kind: ProcedureKind, d: usize) -> Result<Self, GadgetError> {
        match kind {
            ProcedureKind::Agp => Self::agp(d),
            ProcedureKind::Qed => Self::qed(d),
        }
    }

    /// Accepts either standard shape, recovering `d` from the sequence.
    pub fn from_sequence(sequence: Vec<Component>) -> Result<Self, GadgetError> {
        let lms = sequence.iter().filter(|&&c| c == Component::Lm).count();
        for kind in [ProcedureKind::Agp, ProcedureKind::Qed] {
            if lms % 2 == 1 {
                let p = Self::new(kind, lms)?;
                if p.sequence == sequence {
                    return Ok(p);
                }
            }
        }
        Err(GadgetError::Malformed(format!(
            "{} is neither an AGP nor a QED procedure",
            sequence.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
        )))
    }

    /// Measured components (LM and QED) in sequence order.
    fn measured(&self) -> Vec<usize> {
        (0..self.sequence.len())
            .filter(|&i| self.sequence[i] != Component::Qec)
            .collect()
    }

    fn validate(&self) -> Result<(), GadgetError> {
        match (self.sequence.first(), self.sequence.last()) {
            (Some(Component::Lm), Some(Component::Lm)) => Ok(()),
            _ => Err(GadgetError::Malformed(
                "sequence must start and end with LM".into(),
            )),
        }
    }

    /// Error columns in build order: per component, the data error entering
    /// it (skipped for QEC, which absorbs it) followed by its outcome flip.
    pub fn error_kinds(&self) -> Vec<GadgetErrorKind> {
        let mut out = Vec::new();
        for (i, c) in self.sequence.iter().enumerate() {
            if *c != Component::Qec {
                out.push(GadgetErrorKind::Data { index: i });
                out.push(GadgetErrorKind::Flip { index: i });
            }
        }
        out
    }
}

/// Coarse detector error model of a procedure.
///
/// Outcomes `m_i` are the LM and QED results in order. Every QED outcome is
/// a detector on its own, every LM after the first is compared with the
/// previous LM, and the observable is the final LM.
pub fn build_gadget_dem(p: &ComponentProcedure) -> Result<DetectorErrorModel, GadgetError> {
    p.validate()?;
    let measured = p.measured();
    let m = measured.len();
    let slot = |component: usize| measured.iter().position(|&c| c == component);

    let mut dets: Vec<Vec<usize>> = Vec::new();
    let mut prev_lm: Option<usize> = None;
    for (k, &c) in measured.iter().enumerate() {
        match p.sequence[c] {
            Component::Qed => dets.push(vec![k]),
            Component::Lm => {
                if let Some(j) = prev_lm {
                    dets.push(vec![j, k]);
                }
                prev_lm = Some(k);
            }
            Component::Qec => unreachable!(),
        }
    }

    let kinds = p.error_kinds();
    let mut omega = BitMatrix::zeros(m, kinds.len());
    for (col, kind) in kinds.iter().enumerate() {
        match *kind {
            GadgetErrorKind::Flip { index } => {
                omega.set(slot(index).unwrap(), col, true);
            }
            GadgetErrorKind::Data { index } => {
                for c in index..p.sequence.len() {
                    if p.sequence[c] == Component::Qec {
                        break;
                    }
                    omega.set(slot(c).unwrap(), col, true);
                }
            }
        }
    }

    let mut dm = BitMatrix::zeros(dets.len(), m);
    for (i, det) in dets.iter().enumerate() {
        for &k in det {
            dm.set(i, k, true);
        }
    }
    let mut obs = BitMatrix::zeros(1, m);
    obs.set(0, m - 1, true);
    let h = dm.multiply(&omega).expect("shapes agree");
    let l = obs.multiply(&omega).expect("shapes agree");
    let priors = vec![0.0; kinds.len()];
    Ok(DetectorErrorModel::from_matrices(h, l, priors).expect("shapes agree"))
}

/// Minimum undetected logical weight, searched up to `d + 1`.
pub fn gadget_distance(dem: &DetectorErrorModel, d: usize) -> Option<Witness> {
    circuit_distance(dem, d + 1).expect("gadget models have an observable")
}

pub fn component_count(
    kind: ProcedureKind,
    d: usize,
) -> Result<BTreeMap<Component, usize>, GadgetError> {
    if d % 2 == 0 {
        return Err(GadgetError::BadDistance(d));
    }
    let p = ComponentProcedure::new(kind, d)?;
    let mut counts = BTreeMap::new();
    for c in p.sequence {
        *counts.entry(c).or_insert(0) += 1;
    }
    Ok(counts)
}
