//! Error locations, Pauli-frame propagation and error equivalence.
//!
//! All error columns are propagated in one pass: every qubit carries an `x`
//! and a `z` bit-lane with one bit per error location.

use thiserror::Error;

use crate::circuit::{Circuit, Instruction, NoiseKind};
use crate::detectors::{analyze, DetectorError};
use crate::gf2::{BitMatrix, BitVec};
use crate::pauli::{Gate, PauliKind, PauliString};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("detector count mismatch: {0} vs {1}")]
    DetectorCount(usize, usize),
    #[error("data qubit count mismatch: {0} vs {1}")]
    DataCount(usize, usize),
    #[error("error id {0} out of range")]
    BadError(usize),
    #[error("stabilizer group too large ({0} generators, limit 16)")]
    GroupTooLarge(usize),
    #[error("mixed X/Z stabilizer extraction is not supported: {0}")]
    MixedStabilizer(String),
    #[error("invalid extraction spec: {0}")]
    Spec(String),
}

/// What an error does.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    /// A Pauli applied after the instruction at `position`.
    Pauli(Vec<(usize, PauliKind)>),
    /// Flip of measurement result `m_k` (1-based).
    MeasFlip(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Input,
    Internal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorLocation {
    pub id: usize,
    pub kind: ErrorKind,
    /// Instruction index the error follows.
    pub position: usize,
    pub prob: f64,
    pub class: ErrorClass,
    /// Locations sharing a channel are mutually exclusive outcomes of one
    /// noise application.
    pub channel: usize,
}

/// Enumerates error locations in instruction order, then target order, then
/// the fixed Pauli order of the channel. A channel with `k` outcomes and
/// probability `p` gives each outcome probability `p / k`.
pub fn enumerate_errors(c: &Circuit) -> Vec<ErrorLocation> {
    let mut out = Vec::new();
    let mut meas = 0usize;
    let mut channel = 0usize;
    for (pos, inst) in c.instructions.iter().enumerate() {
        match inst {
            Instruction::Noise { channel: ch, targets } => {
                let outcomes = ch.kind.outcomes();
                let k = outcomes.len() as f64;
                for group in targets.chunks(ch.kind.arity()) {
                    for paulis in &outcomes {
                        let terms: Vec<(usize, PauliKind)> = group
                            .iter()
                            .zip(paulis)
                            .filter(|(_, p)| **p != PauliKind::I)
                            .map(|(&q, &p)| (q, p))
                            .collect();
                        out.push(ErrorLocation {
                            id: out.len(),
                            kind: ErrorKind::Pauli(terms),
                            position: pos,
                            prob: ch.p / k,
                            class: ErrorClass::Internal,
                            channel,
                        });
                    }
                    channel += 1;
                }
            }
            _ => {
                let count = inst.measurement_count();
                if let Some(p) = inst.flip_prob() {
                    for j in 0..count {
                        out.push(ErrorLocation {
                            id: out.len(),
                            kind: ErrorKind::MeasFlip(meas + j + 1),
                            position: pos,
                            prob: p,
                            class: ErrorClass::Internal,
                            channel,
                        });
                        channel += 1;
                    }
                }
                meas += count;
            }
        }
    }
    out
}

/// `Ω` (measurements x errors) and the residual Pauli of every error at the
/// end of the circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeMatrix {
    pub omega: BitMatrix,
    /// `e x n`: X part of each error's residual operator.
    pub output_x: BitMatrix,
    /// `e x n`: Z part of each error's residual operator.
    pub output_z: BitMatrix,
}

impl SyndromeMatrix {
    pub fn num_errors(&self) -> usize {
        self.omega.cols()
    }

    pub fn output_op(&self, j: usize) -> PauliString {
        PauliString {
            x: self.output_x.row(j),
            z: self.output_z.row(j),
            sign: Default::default(),
        }
    }

    pub fn output_ops(&self) -> Vec<PauliString> {
        (0..self.num_errors()).map(|j| self.output_op(j)).collect()
    }

    /// Residual operator of an error set (up to sign).
    pub fn output_of(&self, errs: &[usize]) -> PauliString {
        let n = self.output_x.cols();
        let mut p = PauliString::identity(n);
        for &j in errs {
            p.x.xor_assign(&self.output_x.row(j));
            p.z.xor_assign(&self.output_z.row(j));
        }
        p
    }

    /// Flipped measurements of an error set.
    pub fn flips_of(&self, errs: &[usize]) -> BitVec {
        self.omega.sum_columns(errs)
    }
}

struct Frames {
    w: usize,
    x: Vec<Vec<u64>>,
    z: Vec<Vec<u64>>,
}

impl Frames {
    fn xor_into(dst: &mut [u64], src: &[u64]) {
        for (a, b) in dst.iter_mut().zip(src) {
            *a ^= b;
        }
    }

    fn gate(&mut self, g: Gate, t: &[usize]) {
        match g {
            Gate::H => std::mem::swap(&mut self.x[t[0]], &mut self.z[t[0]]),
            Gate::S => {
                let xs = self.x[t[0]].clone();
                Self::xor_into(&mut self.z[t[0]], &xs);
            }
            Gate::X | Gate::Y | Gate::Z => {}
            Gate::Cnot => {
                let (c, tg) = (t[0], t[1]);
                let xc = self.x[c].clone();
                Self::xor_into(&mut self.x[tg], &xc);
                let zt = self.z[tg].clone();
                Self::xor_into(&mut self.z[c], &zt);
            }
            Gate::Cz => {
                let (a, b) = (t[0], t[1]);
                let xa = self.x[a].clone();
                let xb = self.x[b].clone();
                Self::xor_into(&mut self.z[a], &xb);
                Self::xor_into(&mut self.z[b], &xa);
            }
        }
    }

    /// Lanes whose frame anticommutes with `op`.
    fn anticommuting(&self, op: &PauliString) -> Vec<u64> {
        let mut acc = vec![0u64; self.w];
        for q in 0..op.n() {
            match op.get(q) {
                PauliKind::I => {}
                PauliKind::X => Self::xor_into(&mut acc, &self.z[q]),
                PauliKind::Z => Self::xor_into(&mut acc, &self.x[q]),
                PauliKind::Y => {
                    Self::xor_into(&mut acc, &self.x[q]);
                    Self::xor_into(&mut acc, &self.z[q]);
                }
            }
        }
        acc
    }
}

/// Propagates every location through the circuit in a single pass.
pub fn build_syndrome_matrix(c: &Circuit, errs: &[ErrorLocation]) -> SyndromeMatrix {
    let n = c.n_qubits;
    let e = errs.len();
    let m = c.measurement_count();
    let w = e.div_ceil(64);
    let mut fr = Frames {
        w,
        x: vec![vec![0u64; w]; n],
        z: vec![vec![0u64; w]; n],
    };
    let mut inject: Vec<Vec<usize>> = vec![Vec::new(); c.instructions.len()];
    let mut flips: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for (j, loc) in errs.iter().enumerate() {
        match &loc.kind {
            ErrorKind::Pauli(_) => inject[loc.position].push(j),
            ErrorKind::MeasFlip(k) => flips[*k].push(j),
        }
    }
    let mut omega = BitMatrix::zeros(m, e);
    let mut meas = 0usize;
    for (pos, inst) in c.instructions.iter().enumerate() {
        match inst {
            Instruction::Gate { gate, targets } => {
                for t in targets.chunks(gate.arity()) {
                    fr.gate(*gate, t);
                }
            }
            Instruction::Reset { targets } => {
                for &q in targets {
                    fr.x[q].fill(0);
                    fr.z[q].fill(0);
                }
            }
            Instruction::MeasureZ { .. }
            | Instruction::MeasureX { .. }
            | Instruction::MeasurePauli { .. } => {
                let ops = inst.measured_operators(n);
                for op in &ops {
                    meas += 1;
                    let mut row = fr.anticommuting(op);
                    for &j in &flips[meas] {
                        row[j / 64] ^= 1u64 << (j % 64);
                    }
                    omega.set_row(meas - 1, &BitVec::from_words(e, row));
                }
                match inst {
                    Instruction::MeasureZ { targets, .. } => {
                        for &q in targets {
                            fr.z[q].fill(0);
                        }
                    }
                    Instruction::MeasureX { targets, .. } => {
                        for &q in targets {
                            fr.x[q].fill(0);
                        }
                    }
                    _ => {}
                }
            }
            Instruction::Noise { .. } | Instruction::Tick => {}
        }
        for &j in &inject[pos] {
            if let ErrorKind::Pauli(terms) = &errs[j].kind {
                for &(q, k) in terms {
                    let (bx, bz) = k.bits();
                    if bx {
                        fr.x[q][j / 64] ^= 1u64 << (j % 64);
                    }
                    if bz {
                        fr.z[q][j / 64] ^= 1u64 << (j % 64);
                    }
                }
            }
        }
    }
    let mut output_x = BitMatrix::zeros(e, n);
    let mut output_z = BitMatrix::zeros(e, n);
    for q in 0..n {
        for j in 0..e {
            if (fr.x[q][j / 64] >> (j % 64)) & 1 == 1 {
                output_x.set(j, q, true);
            }
            if (fr.z[q][j / 64] >> (j % 64)) & 1 == 1 {
                output_z.set(j, q, true);
            }
        }
    }
    SyndromeMatrix {
        omega,
        output_x,
        output_z,
    }
}

/// A stabilizer group given by generators, with weight minimization over
/// all elements (at most 2^16).
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    n: usize,
    elements: Vec<(BitVec, BitVec)>,
    span: BitMatrix,
}

impl StabilizerGroup {
    pub fn new(n: usize, gens: &[PauliString]) -> Result<Self, FrameError> {
        if gens.len() > 16 {
            return Err(FrameError::GroupTooLarge(gens.len()));
        }
        let mut elements = vec![(BitVec::zeros(n), BitVec::zeros(n))];
        for g in gens {
            if g.n() != n {
                return Err(FrameError::DataCount(g.n(), n));
            }
            let more: Vec<_> = elements
                .iter()
                .map(|(x, z)| (x.xor(&g.x), z.xor(&g.z)))
                .collect();
            elements.extend(more);
        }
        let rows: Vec<BitVec> = gens.iter().map(|g| concat(&g.x, &g.z)).collect();
        let span = BitMatrix::from_rows(2 * n, &rows).expect("lengths");
        Ok(StabilizerGroup { n, elements, span })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether `p` (up to sign) is a group element.
    pub fn contains(&self, p: &PauliString) -> bool {
        let v = concat(&p.x, &p.z);
        v.is_zero() || self.span.row_space_contains(&v)
    }

    /// Minimum X weight and minimum Z weight over `p * g`, each minimized
    /// independently over the group.
    pub fn min_weights(&self, p: &PauliString) -> (usize, usize) {
        let mut wx = usize::MAX;
        let mut wz = usize::MAX;
        for (x, z) in &self.elements {
            wx = wx.min(p.x.xor(x).count_ones());
            wz = wz.min(p.z.xor(z).count_ones());
        }
        (wx, wz)
    }
}

fn concat(a: &BitVec, b: &BitVec) -> BitVec {
    let mut v = BitVec::zeros(a.len() + b.len());
    for i in a.ones() {
        v.set(i, true);
    }
    for i in b.ones() {
        v.set(a.len() + i, true);
    }
    v
}

/// Data qubits, measured stabilizers (on the data qubits, in data order) and
/// post-selected measurements of a syndrome-extraction circuit.
#[derive(Clone, Debug)]
pub struct ExtractionSpec {
    pub data_qubits: Vec<usize>,
    pub stabilizers: Vec<PauliString>,
    /// Measurements (1-based) whose flip aborts the run.
    pub postselect: Vec<usize>,
}

/// A circuit together with its detectors, error locations, `Ω`, and `H`
/// restricted to the detectors that are not pure post-selection checks.
#[derive(Clone, Debug)]
pub struct ErrorContext {
    pub circuit: Circuit,
    pub spec: ExtractionSpec,
    pub errors: Vec<ErrorLocation>,
    pub syndromes: SyndromeMatrix,
    pub h: BitMatrix,
    pub group: StabilizerGroup,
    postselect_mask: BitVec,
    data_mask_index: Vec<usize>,
}

impl ErrorContext {
    pub fn new(circuit: &Circuit, spec: &ExtractionSpec) -> Result<Self, FrameError> {
        for &q in &spec.data_qubits {
            if q >= circuit.n_qubits {
                return Err(FrameError::Spec(format!("data qubit {q} out of range")));
            }
        }
        let analysis = analyze(circuit)?;
        let errors = enumerate_errors(circuit);
        let syndromes = build_syndrome_matrix(circuit, &errors);
        let m = circuit.measurement_count();
        let mut postselect_mask = BitVec::zeros(m);
        for &k in &spec.postselect {
            if k == 0 || k > m {
                return Err(FrameError::Spec(format!("post-selected m{k} out of range")));
            }
            postselect_mask.set(k - 1, true);
        }
        let dm = analysis.detectors.measurement_matrix();
        let keep: Vec<usize> = (0..dm.rows())
            .filter(|&r| {
                let row = dm.row(r);
                !row.and(&postselect_mask).xor(&row).is_zero() || row.is_zero()
            })
            .collect();
        let h = dm
            .select_rows(&keep)
            .multiply(&syndromes.omega)
            .expect("D and Ω conform");
        let group = StabilizerGroup::new(spec.data_qubits.len(), &spec.stabilizers)?;
        Ok(ErrorContext {
            circuit: circuit.clone(),
            spec: spec.clone(),
            errors,
            syndromes,
            h,
            group,
            postselect_mask,
            data_mask_index: spec.data_qubits.clone(),
        })
    }

    fn check_ids(&self, errs: &[usize]) -> Result<(), FrameError> {
        match errs.iter().find(|&&j| j >= self.errors.len()) {
            Some(&j) => Err(FrameError::BadError(j)),
            None => Ok(()),
        }
    }

    /// Syndrome over the kept detectors.
    pub fn syndrome(&self, errs: &[usize]) -> BitVec {
        self.h.sum_columns(errs)
    }

    /// Whether the error set flips a post-selected measurement.
    pub fn aborts(&self, errs: &[usize]) -> bool {
        !self.syndromes.flips_of(errs).and(&self.postselect_mask).is_zero()
    }

    /// Residual operator restricted to the data qubits, indexed in data order.
    pub fn data_output(&self, errs: &[usize]) -> PauliString {
        let full = self.syndromes.output_of(errs);
        let k = self.data_mask_index.len();
        let mut p = PauliString::identity(k);
        for (i, &q) in self.data_mask_index.iter().enumerate() {
            p.set(i, full.get(q));
        }
        p
    }
}

/// Equal syndromes and equal data outputs modulo the first context's
/// stabilizer group.
pub fn errors_equivalent(
    c1: &ErrorContext,
    e1: &[usize],
    c2: &ErrorContext,
    e2: &[usize],
) -> Result<bool, FrameError> {
    c1.check_ids(e1)?;
    c2.check_ids(e2)?;
    if c1.h.rows() != c2.h.rows() {
        return Err(FrameError::DetectorCount(c1.h.rows(), c2.h.rows()));
    }
    if c1.spec.data_qubits.len() != c2.spec.data_qubits.len() {
        return Err(FrameError::DataCount(
            c1.spec.data_qubits.len(),
            c2.spec.data_qubits.len(),
        ));
    }
    if c1.syndrome(e1) != c2.syndrome(e2) {
        return Ok(false);
    }
    let diff = c1.data_output(e1).mul(&c2.data_output(e2)).expect("sizes");
    Ok(c1.group.contains(&diff))
}

/// Outcome of [`check_ft_extraction`].
#[derive(Clone, Debug)]
pub struct ExtractionReport {
    pub passed: bool,
    pub w: usize,
    /// Error sets examined (excluding aborted runs).
    pub checked: usize,
    pub aborted: usize,
    /// A violating error set with its minimized `(X, Z)` weights.
    pub violation: Option<(Vec<usize>, usize, usize)>,
}

fn for_each_subset<F: FnMut(&[usize]) -> bool>(e: usize, max_w: usize, mut f: F) {
    let mut idx: Vec<usize> = Vec::new();
    for w in 1..=max_w.min(e) {
        idx.clear();
        idx.extend(0..w);
        loop {
            if !f(&idx) {
                return;
            }
            let mut i = w;
            while i > 0 && idx[i - 1] == e - w + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for k in i..w {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }
}

/// Exhaustively checks that every set of at most `w` circuit-level errors
/// leaves a residual with X and Z weight at most `w` on the data qubits
/// (weights minimized over the measured stabilizers).
pub fn check_ft_extraction(
    c: &Circuit,
    w: usize,
    spec: &ExtractionSpec,
) -> Result<ExtractionReport, FrameError> {
    let ctx = ErrorContext::new(c, spec)?;
    let mut report = ExtractionReport {
        passed: true,
        w,
        checked: 0,
        aborted: 0,
        violation: None,
    };
    for_each_subset(ctx.errors.len(), w, |set| {
        if ctx.aborts(set) {
            report.aborted += 1;
            return true;
        }
        report.checked += 1;
        let (wx, wz) = ctx.group.min_weights(&ctx.data_output(set));
        if wx > w || wz > w {
            report.passed = false;
            report.violation = Some((set.to_vec(), wx, wz));
            return false;
        }
        true
    });
    Ok(report)
}

/// Which case of the single-error equivalence argument an error falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EquivalenceClass {
    /// No detector violated: equivalent to data errors after the measurement.
    NoSyndrome,
    /// Syndrome with trivial residual: equivalent to a measurement error.
    MeasurementLike,
    /// Residual anticommutes with the measured operator: equivalent to data
    /// errors before the measurement.
    AnticommutingData,
    /// Residual commutes with the measured operator: a data error after the
    /// measurement plus a measurement error.
    CommutingData,
    /// The error aborts the run through post-selection.
    PostSelected,
}

#[derive(Clone, Debug)]
pub struct EquivalenceEntry {
    pub error: usize,
    pub class: EquivalenceClass,
    /// Matching error ids in the single-measurement circuit.
    pub pheno: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub passed: bool,
    pub entries: Vec<EquivalenceEntry>,
    pub counterexample: Option<usize>,
    /// The single-measurement reference circuit used for comparison.
    pub pheno_circuit: Circuit,
}

/// The single Pauli-product-measurement circuit for `stabilizer`, with X and
/// Z error sites on every data qubit before and after the measurement and a
/// measurement flip. Data starts in the +1 eigenstate of the stabilizer.
pub fn pheno_measurement_circuit(stabilizer: &PauliString) -> Result<Circuit, FrameError> {
    let n = stabilizer.n();
    let is_x = stabilizer.x_weight() > 0;
    let is_z = stabilizer.z_weight() > 0;
    if (is_x && is_z) || (!is_x && !is_z) {
        return Err(FrameError::MixedStabilizer(stabilizer.sparse_label()));
    }
    let mut c = Circuit::new(n);
    let all: Vec<usize> = (0..n).collect();
    use crate::circuit::NoiseChannel;
    let noise = |kind| Instruction::Noise {
        channel: NoiseChannel { kind, p: 0.0 },
        targets: all.clone(),
    };
    if is_x {
        c.instructions.push(Instruction::Gate {
            gate: Gate::H,
            targets: all.clone(),
        });
    }
    c.instructions.push(noise(NoiseKind::XError));
    c.instructions.push(noise(NoiseKind::ZError));
    let product: Vec<(usize, PauliKind)> = (0..n)
        .filter(|&q| stabilizer.get(q) != PauliKind::I)
        .map(|q| (q, stabilizer.get(q)))
        .collect();
    c.instructions.push(Instruction::MeasurePauli {
        products: vec![product],
        flip: Some(0.0),
    });
    c.instructions.push(noise(NoiseKind::XError));
    c.instructions.push(noise(NoiseKind::ZError));
    Ok(c)
}

/// For every single circuit-level error of `c_ft`, finds an equivalent set of
/// at most one X-type and one Z-type phenomenological error in the
/// single-measurement circuit, and classifies it.
pub fn verify_extraction_equivalence(
    c_ft: &Circuit,
    spec: &ExtractionSpec,
) -> Result<EquivalenceReport, FrameError> {
    let [stabilizer] = spec.stabilizers.as_slice() else {
        return Err(FrameError::Spec(
            "equivalence check needs exactly one measured stabilizer".into(),
        ));
    };
    let pheno = pheno_measurement_circuit(stabilizer)?;
    let n = stabilizer.n();
    let pspec = ExtractionSpec {
        data_qubits: (0..n).collect(),
        stabilizers: spec.stabilizers.clone(),
        postselect: Vec::new(),
    };
    let ft = ErrorContext::new(c_ft, spec)?;
    let ph = ErrorContext::new(&pheno, &pspec)?;
    if ft.h.rows() != ph.h.rows() {
        return Err(FrameError::DetectorCount(ft.h.rows(), ph.h.rows()));
    }

    // Phenomenological candidates: at most one X-type and one Z-type error.
    // A measurement flip counts as X-type for a Z stabilizer and vice versa.
    let z_stab = stabilizer.z_weight() > 0;
    let x_like: Vec<usize> = Vec::new();
    let (mut xs, mut zs) = (x_like.clone(), x_like);
    for loc in &ph.errors {
        match &loc.kind {
            ErrorKind::MeasFlip(_) => {
                if z_stab {
                    xs.push(loc.id)
                } else {
                    zs.push(loc.id)
                }
            }
            ErrorKind::Pauli(t) => match t[0].1 {
                PauliKind::X => xs.push(loc.id),
                _ => zs.push(loc.id),
            },
        }
    }
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new()];
    for &a in &xs {
        candidates.push(vec![a]);
    }
    for &b in &zs {
        candidates.push(vec![b]);
    }
    for &a in &xs {
        for &b in &zs {
            let mut v = vec![a, b];
            v.sort_unstable();
            candidates.push(v);
        }
    }

    let mut entries = Vec::new();
    let mut counterexample = None;
    for j in 0..ft.errors.len() {
        let e = [j];
        if ft.aborts(&e) {
            entries.push(EquivalenceEntry {
                error: j,
                class: EquivalenceClass::PostSelected,
                pheno: Vec::new(),
            });
            continue;
        }
        let found = candidates
            .iter()
            .find(|cand| errors_equivalent(&ft, &e, &ph, cand).unwrap_or(false));
        let Some(cand) = found else {
            counterexample = Some(j);
            break;
        };
        let out = ft.data_output(&e);
        let class = if ft.syndrome(&e).is_zero() {
            EquivalenceClass::NoSyndrome
        } else if ft.group.contains(&out) {
            EquivalenceClass::MeasurementLike
        } else if !out.commutes(stabilizer).expect("sizes") {
            EquivalenceClass::AnticommutingData
        } else {
            EquivalenceClass::CommutingData
        };
        entries.push(EquivalenceEntry {
            error: j,
            class,
            pheno: cand.clone(),
        });
    }
    Ok(EquivalenceReport {
        passed: counterexample.is_none(),
        entries,
        counterexample,
        pheno_circuit: pheno,
    })
}
