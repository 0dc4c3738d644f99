//! Detector derivation by symbolic tableau simulation.
//!
//! Every deterministic measurement `m_i` yields a candidate row: the symbols
//! of its predicted sign plus `m_i` itself, with the sign's constant as the
//! expected parity. Rows are triangular (row `i` has its highest bit at `i`)
//! and therefore independent. Declared observables are then split off: for
//! each observable, the candidate row with the highest index in its
//! representation is removed from the detector set, so detectors and
//! observables together span exactly the deterministic parities.

use thiserror::Error;

use crate::circuit::{Circuit, Instruction, MeasurementSet};
use crate::gf2::{BitMatrix, BitVec};
use crate::pauli::{MeasureOutcome, PauliError, Tableau};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DetectorError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("measurement reference m{0} out of range")]
    BadReference(usize),
    #[error("observable {index} is not deterministic: it depends on random outcome m{measurement}")]
    NotDeterministic { index: usize, measurement: usize },
    #[error("observable {0} is trivial or a combination of detectors and earlier observables")]
    DependentObservable(usize),
    #[error("declared detector {index} is not deterministic (random outcome m{measurement})")]
    DetectorNotDeterministic { index: usize, measurement: usize },
    #[error("declared detector {index} has parity {declared} but the circuit fixes it to {derived}")]
    DetectorParity {
        index: usize,
        declared: bool,
        derived: bool,
    },
    #[error("declared detectors are linearly dependent")]
    DependentDetectors,
}

/// Detector matrix `D`, expected parities `b` and the measurement count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorSet {
    /// `d x m`, or `d x (m + 1)` after [`normalize_constants`].
    pub matrix: BitMatrix,
    pub constants: BitVec,
    pub num_measurements: usize,
}

impl DetectorSet {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    /// Whether the constant column has been appended.
    pub fn is_normalized(&self) -> bool {
        self.matrix.cols() == self.num_measurements + 1
    }

    /// The `d x m` part acting on measurements only.
    pub fn measurement_matrix(&self) -> BitMatrix {
        if self.is_normalized() {
            let cols: Vec<usize> = (0..self.num_measurements).collect();
            self.matrix.select_columns(&cols)
        } else {
            self.matrix.clone()
        }
    }

    /// Expected parities, read from the constant column when normalized.
    pub fn parities(&self) -> BitVec {
        if self.is_normalized() {
            self.matrix.column(self.num_measurements)
        } else {
            self.constants.clone()
        }
    }

    /// Inverse of [`normalize_constants`].
    pub fn strip_constant_column(&self) -> DetectorSet {
        DetectorSet {
            matrix: self.measurement_matrix(),
            constants: self.parities(),
            num_measurements: self.num_measurements,
        }
    }

    /// Detector values `D m ⊕ b` for a measurement record.
    pub fn evaluate(&self, outcomes: &BitVec) -> BitVec {
        let mut v = self
            .measurement_matrix()
            .mul_vec(outcomes)
            .expect("measurement record length");
        v.xor_assign(&self.parities());
        v
    }
}

/// Appends the constant column so that every expected parity becomes 0.
pub fn normalize_constants(ds: &DetectorSet) -> DetectorSet {
    if ds.is_normalized() {
        return ds.clone();
    }
    DetectorSet {
        matrix: ds.matrix.with_column(&ds.constants),
        constants: BitVec::zeros(ds.len()),
        num_measurements: ds.num_measurements,
    }
}

/// One deterministic measurement: its parity row over measurements, the
/// parity in the actual circuit, and how the parity depends on the initial
/// state (one bit per qubit).
#[derive(Clone, Debug)]
struct Row {
    r: BitVec,
    b: bool,
    eta: BitVec,
}

impl Row {
    fn xor_assign(&mut self, o: &Row) {
        self.r.xor_assign(&o.r);
        self.b ^= o.b;
        self.eta.xor_assign(&o.eta);
    }
}

/// Deterministic-measurement rows indexed by measurement (0-based).
struct Candidates {
    m: usize,
    n: usize,
    rows: Vec<Option<Row>>,
}

impl Candidates {
    fn from_circuit(c: &Circuit) -> Result<Self, DetectorError> {
        let m = c.measurement_count();
        let n = c.n_qubits;
        let mut t = Tableau::with_input_symbols(n, m + 1);
        let mut rows = Vec::with_capacity(m);
        let mut idx = 0usize;
        for inst in &c.instructions {
            match inst {
                Instruction::Gate { gate, targets } => t.apply_clifford(*gate, targets)?,
                Instruction::Reset { targets } => {
                    for &q in targets {
                        t.reset(q)?;
                    }
                }
                Instruction::MeasureZ { .. }
                | Instruction::MeasureX { .. }
                | Instruction::MeasurePauli { .. } => {
                    for op in inst.measured_operators(n) {
                        idx += 1;
                        match t.measure_and_bind(&op, idx)? {
                            MeasureOutcome::Random => rows.push(None),
                            MeasureOutcome::Deterministic(sign) => {
                                let mut r = BitVec::zeros(m);
                                let mut eta = BitVec::zeros(n);
                                for s in sign.measurement_terms.iter() {
                                    if s > m {
                                        eta.flip(s - m - 1);
                                    } else {
                                        r.flip(s - 1);
                                    }
                                }
                                r.flip(idx - 1);
                                rows.push(Some(Row {
                                    r,
                                    b: sign.constant,
                                    eta,
                                }));
                            }
                        }
                    }
                }
                Instruction::Noise { .. } | Instruction::Tick => {}
            }
        }
        Ok(Candidates { m, n, rows })
    }

    /// Expresses `v` through candidate rows, or returns the first random
    /// measurement that blocks it.
    fn reduce(&self, v: &BitVec) -> Result<Row, usize> {
        let mut acc = Row {
            r: v.clone(),
            b: false,
            eta: BitVec::zeros(self.n),
        };
        while let Some(i) = acc.r.last_one() {
            match &self.rows[i] {
                Some(row) => acc.xor_assign(row),
                None => return Err(i + 1),
            }
        }
        Ok(acc)
    }
}

fn decl_vector(m: usize, decl: &MeasurementSet) -> Result<BitVec, DetectorError> {
    let mut v = BitVec::zeros(m);
    for &i in &decl.measurements {
        if i == 0 || i > m {
            return Err(DetectorError::BadReference(i));
        }
        v.flip(i - 1);
    }
    Ok(v)
}

/// Incremental GF(2) echelon basis whose vectors carry a tag; reducing a
/// vector returns the XOR of the tags used.
struct TaggedBasis {
    pivots: Vec<(usize, BitVec, BitVec)>,
    tag_len: usize,
}

impl TaggedBasis {
    fn new(tag_len: usize) -> Self {
        TaggedBasis {
            pivots: Vec::new(),
            tag_len,
        }
    }

    /// Residual and accumulated tag.
    fn reduce(&self, v: &BitVec) -> (BitVec, BitVec) {
        let mut v = v.clone();
        let mut tag = BitVec::zeros(self.tag_len);
        for (p, b, t) in &self.pivots {
            if v.get(*p) {
                v.xor_assign(b);
                tag.xor_assign(t);
            }
        }
        (v, tag)
    }

    /// Adds `v` if independent; returns whether it was added.
    fn insert(&mut self, v: &BitVec, tag: BitVec) -> bool {
        let (res, acc) = self.reduce(v);
        let Some(p) = res.last_one() else {
            return false;
        };
        let mut tag = tag;
        tag.xor_assign(&acc);
        for (_, b, t) in self.pivots.iter_mut() {
            if b.get(p) {
                b.xor_assign(&res);
                t.xor_assign(&tag);
            }
        }
        self.pivots.push((p, res, tag));
        true
    }
}

/// Detectors, resolved observables and the per-measurement determinism of a
/// circuit.
#[derive(Clone, Debug)]
pub struct CircuitAnalysis {
    pub detectors: DetectorSet,
    /// `(o, b)` per declared observable.
    pub observables: Vec<(BitVec, bool)>,
    /// Whether each measurement is deterministic in the noise-free circuit.
    pub deterministic: Vec<bool>,
}

impl CircuitAnalysis {
    /// Observable matrix `O^T` (one row per observable, over measurements).
    pub fn observable_matrix(&self) -> BitMatrix {
        let rows: Vec<BitVec> = self.observables.iter().map(|(o, _)| o.clone()).collect();
        BitMatrix::from_rows(self.detectors.num_measurements, &rows).expect("lengths agree")
    }
}

/// Derives detectors and resolves declared observables. Declared detectors,
/// when present, are checked and used instead of derived ones.
///
/// Detectors must not depend on the logical state. The initial-state
/// dependence of each observable spans a subspace `Λ`; the dependence that
/// first appears in other measurements (in measurement order) and lies
/// outside `Λ` spans `K`. Detectors are the deterministic parities whose
/// dependence lies in `K`. Observables with no initial-state dependence of
/// their own instead remove the highest detector row they use.
pub fn analyze(c: &Circuit) -> Result<CircuitAnalysis, DetectorError> {
    let cand = Candidates::from_circuit(c)?;
    let m = cand.m;

    let mut observables = Vec::new();
    let mut obs_eta = Vec::new();
    for (k, decl) in c.declared_observables.iter().enumerate() {
        let o = decl_vector(m, decl)?;
        let red = cand
            .reduce(&o)
            .map_err(|mi| DetectorError::NotDeterministic {
                index: k,
                measurement: mi,
            })?;
        observables.push((o, red.b));
        obs_eta.push(red.eta);
    }

    // K ⊕ Λ with tags marking the Λ component.
    let mut lambda = TaggedBasis::new(obs_eta.len());
    for (k, eta) in obs_eta.iter().enumerate() {
        lambda.insert(eta, BitVec::from_indices(obs_eta.len(), &[k]));
    }
    let mut basis = TaggedBasis::new(obs_eta.len());
    for (_, b, t) in &lambda.pivots {
        basis.insert(b, t.clone());
    }
    for row in cand.rows.iter().flatten() {
        basis.insert(&row.eta, BitVec::zeros(obs_eta.len()));
    }

    // Rows whose Λ component is non-zero are combined with the earliest row
    // carrying the same component; the carriers themselves are set aside.
    let mut carriers: Vec<(usize, BitVec, Row)> = Vec::new();
    let mut work: Vec<Option<(Row, Kind)>> = vec![None; m];
    for (i, row) in cand.rows.iter().enumerate() {
        let Some(row) = row else { continue };
        let (_, mut tau) = basis.reduce(&row.eta);
        let mut reduced = row.clone();
        for (p, ct, cr) in &carriers {
            if tau.get(*p) {
                tau.xor_assign(ct);
                reduced.xor_assign(cr);
            }
        }
        let Some(p) = tau.last_one() else {
            work[i] = Some((reduced, Kind::Detector));
            continue;
        };
        for (_, ct, cr) in carriers.iter_mut() {
            if ct.get(p) {
                ct.xor_assign(&tau);
                cr.xor_assign(&reduced);
            }
        }
        carriers.push((p, tau, reduced.clone()));
        work[i] = Some((reduced, Kind::Carrier));
    }

    // Observables without a new initial-state dependence displace a detector.
    let mut seen = TaggedBasis::new(0);
    for (k, (o, _)) in observables.iter().enumerate() {
        let (_, tau) = basis.reduce(&obs_eta[k]);
        if seen.insert(&tau, BitVec::zeros(0)) {
            continue;
        }
        let mut v = o.clone();
        let mut det_used = Vec::new();
        while let Some(i) = v.last_one() {
            let (row, kind) = work[i].as_ref().expect("deterministic by reduction");
            v.xor_assign(&row.r);
            if *kind == Kind::Detector {
                det_used.push(i);
            }
        }
        let Some(&drop) = det_used.first() else {
            return Err(DetectorError::DependentObservable(k));
        };
        let mut repl = work[det_used[0]].as_ref().unwrap().0.clone();
        for &i in &det_used[1..] {
            let r = work[i].as_ref().unwrap().0.clone();
            repl.xor_assign(&r);
        }
        work[drop] = Some((repl, Kind::Observable));
    }

    let detectors = match &c.declared_detectors {
        None => {
            let mut rows = Vec::new();
            let mut consts = Vec::new();
            for (row, kind) in work.iter().flatten() {
                if *kind == Kind::Detector {
                    rows.push(row.r.clone());
                    consts.push(row.b);
                }
            }
            DetectorSet {
                matrix: BitMatrix::from_rows(m, &rows).expect("row lengths"),
                constants: BitVec::from_bools(&consts),
                num_measurements: m,
            }
        }
        Some(decls) => {
            let mut rows = Vec::new();
            let mut consts = Vec::new();
            for (k, decl) in decls.iter().enumerate() {
                let v = decl_vector(m, decl)?;
                let red = cand
                    .reduce(&v)
                    .map_err(|mi| DetectorError::DetectorNotDeterministic {
                        index: k,
                        measurement: mi,
                    })?;
                if red.b != decl.parity {
                    return Err(DetectorError::DetectorParity {
                        index: k,
                        declared: decl.parity,
                        derived: red.b,
                    });
                }
                rows.push(v);
                consts.push(red.b);
            }
            let matrix = BitMatrix::from_rows(m, &rows).expect("row lengths");
            if matrix.rank() != matrix.rows() {
                return Err(DetectorError::DependentDetectors);
            }
            DetectorSet {
                matrix,
                constants: BitVec::from_bools(&consts),
                num_measurements: m,
            }
        }
    };

    // Observables must be independent of each other and of the detectors.
    let mut all = detectors.measurement_matrix();
    for (k, (o, _)) in observables.iter().enumerate() {
        let before = all.rank();
        all.push_row(o);
        if all.rank() == before {
            return Err(DetectorError::DependentObservable(k));
        }
    }

    Ok(CircuitAnalysis {
        detectors,
        observables,
        deterministic: cand.rows.iter().map(|r| r.is_some()).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Detector,
    Carrier,
    Observable,
}

/// Detector set of a circuit; see [`analyze`].
pub fn derive_detectors(c: &Circuit) -> Result<DetectorSet, DetectorError> {
    Ok(analyze(c)?.detectors)
}

/// Vector and expected parity of an observable declaration.
pub fn resolve_observable(
    c: &Circuit,
    decl: &MeasurementSet,
) -> Result<(BitVec, bool), DetectorError> {
    let cand = Candidates::from_circuit(c)?;
    let o = decl_vector(cand.m, decl)?;
    let red = cand
        .reduce(&o)
        .map_err(|mi| DetectorError::NotDeterministic {
            index: 0,
            measurement: mi,
        })?;
    Ok((o, red.b))
}
