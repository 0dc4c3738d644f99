//! Measurement schedules under phenomenological noise and an exhaustive
//! fault-tolerance verifier.
//!
//! A schedule in basis Z measures Z-type products and protects against X
//! errors on data qubits (and vice versa). The noise consists of one data
//! error location per qubit before every round plus a flip per measurement.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{parse_product, Circuit, Instruction, MeasurementSet, NoiseChannel, NoiseKind};
use crate::dem::DetectorErrorModel;
use crate::frames::{build_syndrome_matrix, enumerate_errors, ErrorClass, ErrorKind};
use crate::gf2::{BitMatrix, BitVec};
use crate::pauli::{Gate, PauliKind, PauliString};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid schedule: {0}")]
    Invalid(String),
    #[error("search needs {needed} error sets, budget is {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("stabilizer group too large ({0} independent generators, limit 16)")]
    GroupTooLarge(usize),
    #[error("schedule is not marked self-dual")]
    NotSelfDual,
}

/// Maximum number of error subsets [`verify_ft`] will enumerate.
pub const FT_BUDGET: u128 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn kind(self) -> PauliKind {
        match self {
            Basis::X => PauliKind::X,
            Basis::Z => PauliKind::Z,
        }
    }

    pub fn dual(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    fn letter(self) -> char {
        self.kind().letter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementSchedule {
    pub n: usize,
    pub rounds: Vec<Vec<PauliString>>,
    pub code_stabilizers: Vec<PauliString>,
    pub basis: Basis,
    pub self_dual: bool,
}

fn pure_in(p: &PauliString, basis: Basis) -> bool {
    (0..p.n()).all(|q| matches!(p.get(q), PauliKind::I) || p.get(q) == basis.kind())
}

/// Support vectors of the code stabilizers of one type.
fn typed_supports(stabs: &[PauliString], basis: Basis) -> Vec<BitVec> {
    stabs
        .iter()
        .filter(|s| !s.is_identity() && pure_in(s, basis))
        .map(|s| s.support())
        .collect()
}

impl MeasurementSchedule {
    pub fn num_measurements(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        for p in self.code_stabilizers.iter().chain(self.rounds.iter().flatten()) {
            if p.n() != self.n {
                return Err(ScheduleError::Invalid(format!(
                    "operator {} does not act on {} qubits",
                    p.sparse_label(),
                    self.n
                )));
            }
        }
        let group = typed_supports(&self.code_stabilizers, self.basis);
        let gm = BitMatrix::from_rows(self.n, &group).expect("lengths");
        for (r, round) in self.rounds.iter().enumerate() {
            let mut used = BitVec::zeros(self.n);
            for p in round {
                if p.is_identity() || !pure_in(p, self.basis) {
                    return Err(ScheduleError::Invalid(format!(
                        "round {}: {} is not a {}-type product",
                        r + 1,
                        p.sparse_label(),
                        self.basis.letter()
                    )));
                }
                if !used.and(&p.support()).is_zero() {
                    return Err(ScheduleError::Invalid(format!(
                        "round {}: {} overlaps another product in the round",
                        r + 1,
                        p.sparse_label()
                    )));
                }
                used.xor_assign(&p.support());
                for s in &self.code_stabilizers {
                    if !p.commutes(s).expect("sizes checked") {
                        return Err(ScheduleError::Invalid(format!(
                            "{} anticommutes with stabilizer {}",
                            p.sparse_label(),
                            s.sparse_label()
                        )));
                    }
                }
                if !gm.row_space_contains(&p.support()) {
                    return Err(ScheduleError::Invalid(format!(
                        "{} is not in the stabilizer group",
                        p.sparse_label()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Swaps X and Z everywhere.
    pub fn dualize(&self) -> Result<MeasurementSchedule, ScheduleError> {
        if !self.self_dual {
            return Err(ScheduleError::NotSelfDual);
        }
        let swap = |p: &PauliString| PauliString {
            x: p.z.clone(),
            z: p.x.clone(),
            sign: p.sign.clone(),
        };
        Ok(MeasurementSchedule {
            n: self.n,
            rounds: self
                .rounds
                .iter()
                .map(|r| r.iter().map(swap).collect())
                .collect(),
            code_stabilizers: self.code_stabilizers.iter().map(swap).collect(),
            basis: self.basis.dual(),
            self_dual: true,
        })
    }

    pub fn print(&self) -> String {
        let mut s = String::new();
        writeln!(s, "QUBITS {}", self.n).unwrap();
        writeln!(s, "BASIS {}", self.basis.letter()).unwrap();
        if self.self_dual {
            writeln!(s, "SELF_DUAL").unwrap();
        }
        writeln!(s, "STABILIZERS").unwrap();
        for p in &self.code_stabilizers {
            writeln!(s, "{}", p.sparse_label()).unwrap();
        }
        for round in &self.rounds {
            writeln!(s, "ROUND").unwrap();
            for p in round {
                writeln!(s, "MPP {}", p.sparse_label()).unwrap();
            }
        }
        s
    }
}

/// Parses the `.sched` format:
///
/// ```text
/// QUBITS 3
/// BASIS Z
/// STABILIZERS
/// Z0*Z1
/// Z1*Z2
/// ROUND
/// MPP Z0*Z1
/// ```
///
/// `SELF_DUAL` marks schedules that may be dualized. `#` starts a comment.
pub fn parse_schedule(text: &str) -> Result<MeasurementSchedule, ScheduleError> {
    #[derive(PartialEq)]
    enum Block {
        Header,
        Stabilizers,
        Round,
    }
    let mut n: Option<usize> = None;
    let mut basis = Basis::Z;
    let mut self_dual = false;
    let mut stab_terms: Vec<(usize, Vec<(usize, PauliKind)>)> = Vec::new();
    let mut rounds: Vec<Vec<(usize, Vec<(usize, PauliKind)>)>> = Vec::new();
    let mut block = Block::Header;
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let code = raw.split('#').next().unwrap_or("").trim();
        if code.is_empty() {
            continue;
        }
        let err = |message: String| ScheduleError::Parse { line, message };
        let toks: Vec<&str> = code.split_whitespace().collect();
        match toks[0] {
            "QUBITS" => {
                if n.is_some() {
                    return Err(err("duplicate QUBITS line".into()));
                }
                let v = toks
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .filter(|_| toks.len() == 2)
                    .ok_or_else(|| err("expected `QUBITS n`".into()))?;
                n = Some(v);
            }
            "BASIS" => {
                basis = match toks.get(1).copied() {
                    Some("Z") if toks.len() == 2 => Basis::Z,
                    Some("X") if toks.len() == 2 => Basis::X,
                    _ => return Err(err("expected `BASIS Z` or `BASIS X`".into())),
                };
            }
            "SELF_DUAL" => self_dual = true,
            "STABILIZERS" => block = Block::Stabilizers,
            "ROUND" => {
                block = Block::Round;
                rounds.push(Vec::new());
            }
            "MPP" => {
                if block != Block::Round {
                    return Err(err("MPP outside a ROUND block".into()));
                }
                if toks.len() < 2 {
                    return Err(err("MPP needs a Pauli product".into()));
                }
                for t in &toks[1..] {
                    let prod = parse_product(t).map_err(err)?;
                    rounds.last_mut().unwrap().push((line, prod));
                }
            }
            _ if block == Block::Stabilizers => {
                for t in &toks {
                    let prod = parse_product(t).map_err(err)?;
                    stab_terms.push((line, prod));
                }
            }
            other => return Err(err(format!("unexpected `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| ScheduleError::Parse {
        line: 1,
        message: "missing QUBITS line".into(),
    })?;
    let build = |(line, terms): &(usize, Vec<(usize, PauliKind)>)| {
        PauliString::from_sparse(n, terms).map_err(|e| ScheduleError::Parse {
            line: *line,
            message: e.to_string(),
        })
    };
    let code_stabilizers = stab_terms.iter().map(build).collect::<Result<Vec<_>, _>>()?;
    let rounds = rounds
        .iter()
        .map(|r| r.iter().map(build).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let s = MeasurementSchedule {
        n,
        rounds,
        code_stabilizers,
        basis,
        self_dual,
    };
    s.validate()?;
    Ok(s)
}

/// Where a phenomenological error sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhenoKind {
    /// Data error on `qubit` before round `round` (1-based).
    Data { qubit: usize, round: usize },
    /// Flip of the `index`-th product (0-based) of round `round`; `measurement`
    /// is the 1-based measurement number.
    MeasFlip {
        round: usize,
        index: usize,
        measurement: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhenoError {
    pub class: ErrorClass,
    pub kind: PhenoKind,
}

/// Expanded schedule: the circuit, its error locations in phenomenological
/// order and the models before and after merging. `L` of both models holds
/// the output error (`n` rows).
#[derive(Clone, Debug)]
pub struct PhenoModel {
    pub circuit: Circuit,
    pub errors: Vec<PhenoError>,
    pub raw: DetectorErrorModel,
    pub merged: DetectorErrorModel,
    /// Internal-error count (0 or 1) of each merged column: 0 if any member
    /// location is an input error.
    pub internal: Vec<usize>,
    /// First original location of each merged column.
    pub representative: Vec<usize>,
}

impl PhenoModel {
    pub fn num_columns(&self) -> usize {
        self.merged.num_errors()
    }

    /// Output error of a set of merged columns.
    pub fn output(&self, cols: &[usize]) -> BitVec {
        self.merged.syndrome_of(cols).1
    }

    pub fn syndrome(&self, cols: &[usize]) -> BitVec {
        self.merged.syndrome_of(cols).0
    }

    pub fn internal_weight(&self, cols: &[usize]) -> usize {
        cols.iter().map(|&c| self.internal[c]).sum()
    }
}

/// Builds the noisy circuit for a schedule. Detectors compare each product
/// with its previous measurement, or with 0 on first measurement.
pub fn schedule_circuit(s: &MeasurementSchedule) -> Circuit {
    let n = s.n;
    let mut c = Circuit::new(n);
    let all: Vec<usize> = (0..n).collect();
    if s.basis == Basis::X && n > 0 {
        c.instructions.push(Instruction::Gate {
            gate: Gate::H,
            targets: all.clone(),
        });
    }
    let kind = match s.basis {
        Basis::Z => NoiseKind::XError,
        Basis::X => NoiseKind::ZError,
    };
    let data_noise = Instruction::Noise {
        channel: NoiseChannel { kind, p: 0.001 },
        targets: all.clone(),
    };
    let mut last_seen: HashMap<(BitVec, BitVec), usize> = HashMap::new();
    let mut detectors = Vec::new();
    let mut m = 0usize;
    if s.rounds.is_empty() && n > 0 {
        c.instructions.push(data_noise.clone());
    }
    for round in &s.rounds {
        if n > 0 {
            c.instructions.push(data_noise.clone());
        }
        for p in round {
            let terms: Vec<(usize, PauliKind)> = (0..n)
                .filter(|&q| p.get(q) != PauliKind::I)
                .map(|q| (q, p.get(q)))
                .collect();
            c.instructions.push(Instruction::MeasurePauli {
                products: vec![terms],
                flip: Some(0.001),
            });
            m += 1;
            let key = (p.x.clone(), p.z.clone());
            let refs = match last_seen.insert(key, m) {
                Some(prev) => vec![prev, m],
                None => vec![m],
            };
            detectors.push(MeasurementSet {
                measurements: refs,
                parity: false,
            });
        }
    }
    c.declared_detectors = Some(detectors);
    c
}

/// Expands a schedule into its phenomenological error model and merges
/// equivalent locations.
pub fn expand_schedule(s: &MeasurementSchedule) -> Result<PhenoModel, ScheduleError> {
    s.validate()?;
    let c = schedule_circuit(s);
    let locs = enumerate_errors(&c);
    let sm = build_syndrome_matrix(&c, &locs);
    let analysis = crate::detectors::analyze(&c)
        .map_err(|e| ScheduleError::Invalid(format!("detectors: {e}")))?;
    let h = analysis
        .detectors
        .measurement_matrix()
        .multiply(&sm.omega)
        .expect("conformable");
    let out = match s.basis {
        Basis::Z => sm.output_x.transpose(),
        Basis::X => sm.output_z.transpose(),
    };

    // Round index of each measurement for labelling flips.
    let mut meas_round = Vec::new();
    for (r, round) in s.rounds.iter().enumerate() {
        for i in 0..round.len() {
            meas_round.push((r + 1, i));
        }
    }
    let mut data = Vec::new();
    let mut flips = Vec::new();
    let mut layer = 0usize;
    let mut last_pos = usize::MAX;
    for (j, loc) in locs.iter().enumerate() {
        match &loc.kind {
            ErrorKind::Pauli(terms) => {
                if loc.position != last_pos {
                    layer += 1;
                    last_pos = loc.position;
                }
                let e = PhenoError {
                    class: if layer == 1 {
                        ErrorClass::Input
                    } else {
                        ErrorClass::Internal
                    },
                    kind: PhenoKind::Data {
                        qubit: terms[0].0,
                        round: layer,
                    },
                };
                data.push((j, e));
            }
            ErrorKind::MeasFlip(k) => {
                let (round, index) = meas_round[k - 1];
                flips.push((
                    j,
                    PhenoError {
                        class: ErrorClass::Internal,
                        kind: PhenoKind::MeasFlip {
                            round,
                            index,
                            measurement: *k,
                        },
                    },
                ));
            }
        }
    }
    let order: Vec<(usize, PhenoError)> = data.into_iter().chain(flips).collect();
    let perm: Vec<usize> = order.iter().map(|(j, _)| *j).collect();
    let errors: Vec<PhenoError> = order.iter().map(|(_, e)| *e).collect();
    let priors: Vec<f64> = perm.iter().map(|&j| locs[j].prob).collect();
    let raw = DetectorErrorModel::from_matrices(
        h.select_columns(&perm),
        out.select_columns(&perm),
        priors,
    )
    .map_err(|e| ScheduleError::Invalid(e.to_string()))?;
    let merged = raw.merge_equivalent();
    let mut internal = vec![1usize; merged.num_errors()];
    let mut representative = vec![usize::MAX; merged.num_errors()];
    for (j, &col) in merged.merge_map.iter().enumerate() {
        if errors[j].class == ErrorClass::Input {
            internal[col] = 0;
        }
        if representative[col] == usize::MAX {
            representative[col] = j;
        }
    }
    Ok(PhenoModel {
        circuit: c,
        errors,
        raw,
        merged,
        internal,
        representative,
    })
}

/// All elements of the group generated by `gens` (support vectors).
fn group_elements(n: usize, gens: &[BitVec]) -> Result<Vec<BitVec>, ScheduleError> {
    let mut m = BitMatrix::from_rows(n, gens).expect("lengths");
    m.rref_in_place();
    let basis: Vec<BitVec> = m.row_vecs().into_iter().filter(|r| !r.is_zero()).collect();
    if basis.len() > 16 {
        return Err(ScheduleError::GroupTooLarge(basis.len()));
    }
    let mut out = vec![BitVec::zeros(n)];
    for b in &basis {
        let more: Vec<BitVec> = out.iter().map(|e| e.xor(b)).collect();
        out.extend(more);
    }
    Ok(out)
}

/// Weight of `v` minimized over the error-type stabilizer group.
fn min_weight(v: &BitVec, group: &[BitVec]) -> usize {
    group.iter().map(|g| v.xor(g).count_ones()).min().unwrap_or(0)
}

/// An error set in merged-column indices, with its output and internal count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BucketMember {
    pub columns: Vec<usize>,
    pub output: BitVec,
    pub internal: usize,
}

#[derive(Clone, Debug)]
pub struct FtReport {
    pub fault_tolerant: bool,
    pub t: usize,
    /// Correction per achievable syndrome (absent for failing syndromes).
    pub corrections: BTreeMap<BitVec, BitVec>,
    /// Pairs of equal-syndrome error sets with no shared valid correction.
    pub counterexamples: Vec<(BucketMember, BucketMember)>,
    pub model: PhenoModel,
}

fn subset_count(e: usize, t: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=t.min(e) {
        total = total.saturating_add(c);
        c = c.saturating_mul((e - k) as u128) / (k as u128 + 1);
    }
    total
}

fn for_each_subset(e: usize, t: usize, mut f: impl FnMut(&[usize])) {
    f(&[]);
    for w in 1..=t.min(e) {
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            f(&idx);
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

/// Vectors of weight at most `r` on `n` bits, by weight then lexicographic.
fn ball(n: usize, r: usize) -> Vec<BitVec> {
    let mut out = Vec::new();
    for_each_subset(n, r, |idx| out.push(BitVec::from_indices(n, idx)));
    out
}

/// A correction valid for every member.
///
/// Candidates are `e0.output ⊕ v` with `|v| <= e0.internal`, where `e0` is a
/// member with the fewest internal errors. This is complete: any valid `c`
/// satisfies `|c ⊕ e0.output ⊕ σ| <= e0.internal` for some stabilizer `σ`,
/// and `c ⊕ σ` is valid whenever `c` is because every check minimizes over
/// the group.
fn find_correction(members: &[BucketMember], group: &[BitVec], n: usize) -> Option<BitVec> {
    let e0 = members.iter().min_by_key(|m| m.internal)?;
    ball(n, e0.internal).into_iter().find_map(|v| {
        let c = e0.output.xor(&v);
        members
            .iter()
            .all(|m| min_weight(&c.xor(&m.output), group) <= m.internal)
            .then_some(c)
    })
}

fn shared_correction_exists(a: &BucketMember, b: &BucketMember, group: &[BitVec], n: usize) -> bool {
    find_correction(&[a.clone(), b.clone()], group, n).is_some()
}

/// Checks the fault-tolerance condition for all sets of at most `t` merged
/// error columns.
pub fn verify_ft(s: &MeasurementSchedule, t: usize) -> Result<FtReport, ScheduleError> {
    verify_ft_with_budget(s, t, FT_BUDGET)
}

pub fn verify_ft_with_budget(
    s: &MeasurementSchedule,
    t: usize,
    budget: u128,
) -> Result<FtReport, ScheduleError> {
    if t == 0 {
        return Err(ScheduleError::Invalid("t must be at least 1".into()));
    }
    let model = expand_schedule(s)?;
    let e = model.num_columns();
    let needed = subset_count(e, t);
    if needed > budget {
        return Err(ScheduleError::Budget { needed, budget });
    }
    let group = group_elements(s.n, &typed_supports(&s.code_stabilizers, s.basis.dual()))?;

    let ht = model.merged.h.transpose();
    let lt = model.merged.l.transpose();
    let hcols: Vec<BitVec> = (0..e).map(|j| ht.row(j)).collect();
    let lcols: Vec<BitVec> = (0..e).map(|j| lt.row(j)).collect();
    let mut buckets: BTreeMap<BitVec, Vec<BucketMember>> = BTreeMap::new();
    for_each_subset(e, t, |idx| {
        let mut syn = BitVec::zeros(model.merged.num_detectors());
        let mut out = BitVec::zeros(s.n);
        for &j in idx {
            syn.xor_assign(&hcols[j]);
            out.xor_assign(&lcols[j]);
        }
        buckets.entry(syn).or_default().push(BucketMember {
            columns: idx.to_vec(),
            output: out,
            internal: model.internal_weight(idx),
        });
    });

    let bucket_list: Vec<(&BitVec, &Vec<BucketMember>)> = buckets.iter().collect();
    let results: Vec<(BitVec, Result<BitVec, (BucketMember, BucketMember)>)> = bucket_list
        .par_iter()
        .map(|(syn, members)| {
            let verdict = match find_correction(members, &group, s.n) {
                Some(c) => Ok(c),
                None => Err(counterexample(members, &group, s.n)),
            };
            ((*syn).clone(), verdict)
        })
        .collect();

    let mut corrections = BTreeMap::new();
    let mut counterexamples = Vec::new();
    for (syn, r) in results {
        match r {
            Ok(c) => {
                debug_assert!(buckets[&syn]
                    .iter()
                    .all(|m| min_weight(&c.xor(&m.output), &group) <= m.internal));
                corrections.insert(syn, c);
            }
            Err(pair) => counterexamples.push(pair),
        }
    }
    Ok(FtReport {
        fault_tolerant: counterexamples.is_empty(),
        t,
        corrections,
        counterexamples,
        model,
    })
}

/// A pair of members with no shared correction, preferring members with few
/// internal errors. Falls back to the least-internal member paired with the
/// first member its own best candidate fails.
fn counterexample(
    members: &[BucketMember],
    group: &[BitVec],
    n: usize,
) -> (BucketMember, BucketMember) {
    let mut order: Vec<&BucketMember> = members.iter().collect();
    order.sort_by(|a, b| {
        (a.internal, a.columns.len(), &a.columns).cmp(&(b.internal, b.columns.len(), &b.columns))
    });
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            if !shared_correction_exists(a, b, group, n) {
                return ((*a).clone(), (*b).clone());
            }
        }
    }
    let a = order[0];
    let b = order
        .iter()
        .find(|m| min_weight(&a.output.xor(&m.output), group) > m.internal)
        .copied()
        .unwrap_or(a);
    (a.clone(), b.clone())
}

/// Qubit-to-plaquette incidence of a two-dimensional color code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeLayout {
    pub n: usize,
    pub plaquettes: Vec<Vec<usize>>,
}

/// Parses a `.code` file: `qubits N` followed by one plaquette per line.
pub fn parse_layout(text: &str) -> Result<CodeLayout, ScheduleError> {
    let mut n = None;
    let mut plaquettes = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let code = raw.split('#').next().unwrap_or("").trim();
        if code.is_empty() {
            continue;
        }
        let err = |message: String| ScheduleError::Parse { line, message };
        if let Some(rest) = code.strip_prefix("qubits") {
            n = Some(
                rest.trim()
                    .parse::<usize>()
                    .map_err(|_| err("expected `qubits N`".into()))?,
            );
            continue;
        }
        let Some(n) = n else {
            return Err(err("plaquette before `qubits` line".into()));
        };
        let mut p = Vec::new();
        for tok in code.split_whitespace() {
            let q: usize = tok
                .parse()
                .map_err(|_| err(format!("bad qubit `{tok}`")))?;
            if q >= n {
                return Err(err(format!("qubit {q} out of range")));
            }
            if p.contains(&q) {
                return Err(err(format!("qubit {q} repeated")));
            }
            p.push(q);
        }
        plaquettes.push(p);
    }
    Ok(CodeLayout {
        n: n.ok_or(ScheduleError::Parse {
            line: 1,
            message: "missing `qubits` line".into(),
        })?,
        plaquettes,
    })
}

impl CodeLayout {
    pub fn plaquette(&self, i: usize, basis: Basis) -> PauliString {
        let terms: Vec<(usize, PauliKind)> =
            self.plaquettes[i].iter().map(|&q| (q, basis.kind())).collect();
        PauliString::from_sparse(self.n, &terms).expect("validated")
    }

    /// X and Z stabilizers of every plaquette.
    pub fn stabilizers(&self) -> Vec<PauliString> {
        let mut out = Vec::new();
        for b in [Basis::X, Basis::Z] {
            for i in 0..self.plaquettes.len() {
                out.push(self.plaquette(i, b));
            }
        }
        out
    }

    pub fn check_matrix(&self) -> BitMatrix {
        let rows: Vec<BitVec> = self
            .plaquettes
            .iter()
            .map(|p| BitVec::from_indices(self.n, p))
            .collect();
        BitMatrix::from_rows(self.n, &rows).expect("lengths")
    }

    /// `[[n, k, d]]` of the self-dual CSS code, with `d` found by exhaustive
    /// search up to `max_d` (`None` if larger).
    pub fn parameters(&self, max_d: usize) -> (usize, usize, Option<usize>) {
        let h = self.check_matrix();
        css_parameters(&h, &h, max_d)
    }
}

/// `[[n, k, d]]` of the CSS code with X checks `hx` and Z checks `hz`.
pub fn css_parameters(hx: &BitMatrix, hz: &BitMatrix, max_d: usize) -> (usize, usize, Option<usize>) {
    let n = hx.cols();
    let k = n - hx.rank() - hz.rank();
    if k == 0 {
        return (n, 0, None);
    }
    let dz = min_logical(hx, hz, max_d);
    let dx = min_logical(hz, hx, max_d);
    let d = match (dz, dx) {
        (Some(a), Some(b)) => Some(a.min(b)),
        _ => None,
    };
    (n, k, d)
}

/// Smallest weight of `v` with `checks v = 0` and `v` outside the row space
/// of `stabs`.
fn min_logical(checks: &BitMatrix, stabs: &BitMatrix, max_d: usize) -> Option<usize> {
    let n = checks.cols();
    let ct = checks.transpose();
    let cols: Vec<BitVec> = (0..n).map(|j| ct.row(j)).collect();
    let mut found = None;
    for w in 1..=max_d.min(n) {
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            let mut s = BitVec::zeros(checks.rows());
            for &j in &idx {
                s.xor_assign(&cols[j]);
            }
            if s.is_zero() && !stabs.row_space_contains(&BitVec::from_indices(n, &idx)) {
                found = Some(w);
                break;
            }
            let mut i = w;
            while i > 0 && idx[i - 1] == n - w + i - 1 {
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
        if found.is_some() {
            break;
        }
    }
    found
}
