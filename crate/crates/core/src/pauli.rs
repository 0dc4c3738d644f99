//! Pauli strings and a stabilizer tableau whose signs are affine forms over
//! measurement outcomes.
//!
//! A sign is `constant ⊕ Σ m_i ⊕ Σ h_j` where `m_i` are circuit measurement
//! outcomes (1-based) and `h_j` are hidden symbols introduced by resets of
//! qubits whose `Z` value was random. Hidden symbols never appear in a
//! detector; a measurement whose predicted parity still contains one is
//! treated as random.

use std::cmp::Reverse;
use std::fmt;

use thiserror::Error;

use crate::gf2::BitVec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("qubit {qubit} out of range for {n} qubits")]
    BadTarget { qubit: usize, n: usize },
    #[error("gate {gate} expects {expected} targets per application, got {got}")]
    Arity {
        gate: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("duplicate target {0} in two-qubit gate")]
    DuplicateTarget(usize),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("cannot parse Pauli string `{0}`")]
    Parse(String),
}

/// A growable set of symbol indices stored as a bitset.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SymbolSet {
    words: Vec<u64>,
}

impl SymbolSet {
    pub fn new() -> Self {
        SymbolSet::default()
    }

    pub fn singleton(i: usize) -> Self {
        let mut s = SymbolSet::new();
        s.toggle(i);
        s
    }

    pub fn from_indices(it: impl IntoIterator<Item = usize>) -> Self {
        let mut s = SymbolSet::new();
        for i in it {
            s.toggle(i);
        }
        s
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    pub fn toggle(&mut self, i: usize) {
        if self.words.len() <= i / 64 {
            self.words.resize(i / 64 + 1, 0);
        }
        self.words[i / 64] ^= 1u64 << (i % 64);
        self.trim();
    }

    pub fn xor_assign(&mut self, other: &SymbolSet) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        self.trim();
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Elements in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    pub fn max(&self) -> Option<usize> {
        self.iter().last()
    }
}

impl fmt::Debug for SymbolSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// An affine GF(2) form over measurement symbols `m_i` (and hidden symbols).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SymbolicSign {
    pub constant: bool,
    /// Measurement indices (1-based) appearing in the form.
    pub measurement_terms: SymbolSet,
    /// Hidden symbols from resets of qubits with random `Z` value.
    pub hidden_terms: SymbolSet,
}

impl SymbolicSign {
    pub fn constant(b: bool) -> Self {
        SymbolicSign {
            constant: b,
            ..Default::default()
        }
    }

    pub fn measurement(i: usize) -> Self {
        SymbolicSign {
            constant: false,
            measurement_terms: SymbolSet::singleton(i),
            hidden_terms: SymbolSet::new(),
        }
    }

    pub fn is_concrete(&self) -> bool {
        self.measurement_terms.is_empty() && self.hidden_terms.is_empty()
    }

    pub fn xor_assign(&mut self, other: &SymbolicSign) {
        self.constant ^= other.constant;
        self.measurement_terms.xor_assign(&other.measurement_terms);
        self.hidden_terms.xor_assign(&other.hidden_terms);
    }

    /// Value for concrete outcomes; `outcomes[i - 1]` is `m_i`. Returns `None`
    /// when hidden symbols are present or an outcome is missing.
    pub fn evaluate(&self, outcomes: &[bool]) -> Option<bool> {
        if !self.hidden_terms.is_empty() {
            return None;
        }
        let mut v = self.constant;
        for i in self.measurement_terms.iter() {
            v ^= *outcomes.get(i.checked_sub(1)?)?;
        }
        Some(v)
    }
}

impl fmt::Debug for SymbolicSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.constant {
            parts.push("1".into());
        }
        parts.extend(self.measurement_terms.iter().map(|i| format!("m{i}")));
        parts.extend(self.hidden_terms.iter().map(|i| format!("h{i}")));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

impl PauliKind {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliKind::I,
            (true, false) => PauliKind::X,
            (true, true) => PauliKind::Y,
            (false, true) => PauliKind::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            PauliKind::I => (false, false),
            PauliKind::X => (true, false),
            PauliKind::Y => (true, true),
            PauliKind::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            PauliKind::I => 'I',
            PauliKind::X => 'X',
            PauliKind::Y => 'Y',
            PauliKind::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliKind::I),
            'X' => Some(PauliKind::X),
            'Y' => Some(PauliKind::Y),
            'Z' => Some(PauliKind::Z),
            _ => None,
        }
    }
}

/// An n-qubit Pauli operator with a symbolic sign. Bits `(x, z) = (1, 1)` on
/// a qubit denote the Hermitian `Y`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x: BitVec,
    pub z: BitVec,
    pub sign: SymbolicSign,
}

/// Exponent of `i` produced when multiplying `P1 * P2` qubit-wise, summed
/// over all qubits (mod 4).
fn product_phase(x1: &BitVec, z1: &BitVec, x2: &BitVec, z2: &BitVec) -> u32 {
    let mut pos = 0u32;
    let mut neg = 0u32;
    for k in 0..x1.words().len() {
        let (a, b, c, d) = (x1.words()[k], z1.words()[k], x2.words()[k], z2.words()[k]);
        let y1 = a & b;
        let xo = a & !b;
        let zo = !a & b;
        let p = (y1 & !c & d) | (xo & c & d) | (zo & c & !d);
        let n = (y1 & c & !d) | (xo & !c & d) | (zo & c & d);
        pos += p.count_ones();
        neg += n.count_ones();
    }
    (pos + 4 * 64 * x1.words().len() as u32 - neg) % 4
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
            sign: SymbolicSign::default(),
        }
    }

    pub fn single(n: usize, q: usize, kind: PauliKind) -> Self {
        let mut p = PauliString::identity(n);
        p.set(q, kind);
        p
    }

    /// Builds an operator from `(qubit, kind)` pairs.
    pub fn from_sparse(n: usize, terms: &[(usize, PauliKind)]) -> Result<Self, PauliError> {
        let mut p = PauliString::identity(n);
        for &(q, k) in terms {
            if q >= n {
                return Err(PauliError::BadTarget { qubit: q, n });
            }
            p.set(q, k);
        }
        Ok(p)
    }

    /// Parses a dense label such as `"-XIZY"` or `"+ZZ"`.
    pub fn parse_dense(s: &str) -> Result<Self, PauliError> {
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let n = body.chars().count();
        let mut p = PauliString::identity(n);
        for (q, c) in body.chars().enumerate() {
            let k = PauliKind::from_letter(c).ok_or_else(|| PauliError::Parse(s.to_string()))?;
            p.set(q, k);
        }
        p.sign.constant = neg;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, q: usize) -> PauliKind {
        PauliKind::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn set(&mut self, q: usize, kind: PauliKind) {
        let (x, z) = kind.bits();
        self.x.set(q, x);
        self.z.set(q, z);
    }

    pub fn support(&self) -> BitVec {
        self.x.or(&self.z)
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones()
    }

    pub fn x_weight(&self) -> usize {
        self.x.count_ones()
    }

    pub fn z_weight(&self) -> usize {
        self.z.count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Symplectic test: true iff the operators commute.
    pub fn commutes(&self, other: &PauliString) -> Result<bool, PauliError> {
        if self.n() != other.n() {
            return Err(PauliError::SizeMismatch(self.n(), other.n()));
        }
        Ok(!symplectic(&self.x, &self.z, &other.x, &other.z))
    }

    /// Product `self * other` with its phase exponent in `{0,1,2,3}`
    /// (the product equals `i^phase` times the returned operator). The
    /// returned sign combines both input signs and the real part of the phase.
    pub fn mul_with_phase(&self, other: &PauliString) -> Result<(PauliString, u32), PauliError> {
        if self.n() != other.n() {
            return Err(PauliError::SizeMismatch(self.n(), other.n()));
        }
        let g = product_phase(&self.x, &self.z, &other.x, &other.z);
        let mut sign = self.sign.clone();
        sign.xor_assign(&other.sign);
        if g >= 2 {
            sign.constant ^= true;
        }
        Ok((
            PauliString {
                x: self.x.xor(&other.x),
                z: self.z.xor(&other.z),
                sign,
            },
            g % 2,
        ))
    }

    /// Product of two operators, ignoring any residual factor of `i`
    /// (which only arises for anticommuting inputs).
    pub fn mul(&self, other: &PauliString) -> Result<PauliString, PauliError> {
        Ok(self.mul_with_phase(other)?.0)
    }

    /// Restriction to a subset of qubits, keeping the full index space.
    pub fn restricted(&self, mask: &BitVec) -> PauliString {
        PauliString {
            x: self.x.and(mask),
            z: self.z.and(mask),
            sign: self.sign.clone(),
        }
    }

    /// Label without sign, e.g. `XIZ`.
    pub fn label(&self) -> String {
        (0..self.n()).map(|q| self.get(q).letter()).collect()
    }

    /// Sparse product form, e.g. `X0*Z2`; `I` for the identity.
    pub fn sparse_label(&self) -> String {
        let terms: Vec<String> = (0..self.n())
            .filter(|&q| self.get(q) != PauliKind::I)
            .map(|q| format!("{}{}", self.get(q).letter(), q))
            .collect();
        if terms.is_empty() {
            "I".into()
        } else {
            terms.join("*")
        }
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}){}", self.sign, self.label())
    }
}

fn symplectic(x1: &BitVec, z1: &BitVec, x2: &BitVec, z2: &BitVec) -> bool {
    x1.dot(z2) ^ z1.dot(x2)
}

/// Clifford gates understood by the tableau and frame simulators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H,
    S,
    X,
    Y,
    Z,
    Cnot,
    Cz,
}

impl Gate {
    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::S => "S",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::Cnot => "CNOT",
            Gate::Cz => "CZ",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, PauliError> {
        Ok(match s {
            "H" => Gate::H,
            "S" => Gate::S,
            "X" => Gate::X,
            "Y" => Gate::Y,
            "Z" => Gate::Z,
            "CNOT" | "CX" => Gate::Cnot,
            "CZ" => Gate::Cz,
            _ => return Err(PauliError::UnknownGate(s.to_string())),
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot | Gate::Cz => 2,
            _ => 1,
        }
    }

    /// Checks a flat target list: in range, grouped by arity, and no
    /// repeated qubit inside one application.
    pub fn check_targets(self, targets: &[usize], n: usize) -> Result<(), PauliError> {
        for &q in targets {
            if q >= n {
                return Err(PauliError::BadTarget { qubit: q, n });
            }
        }
        let a = self.arity();
        if targets.len() % a != 0 || targets.is_empty() {
            return Err(PauliError::Arity {
                gate: self.name(),
                expected: a,
                got: targets.len(),
            });
        }
        if a == 2 {
            for pair in targets.chunks(2) {
                if pair[0] == pair[1] {
                    return Err(PauliError::DuplicateTarget(pair[0]));
                }
            }
        }
        Ok(())
    }
}

/// Conjugates the bits (and optionally the sign) of one operator by a gate
/// application on `t`.
fn conjugate(x: &mut BitVec, z: &mut BitVec, sign: Option<&mut bool>, gate: Gate, t: &[usize]) {
    let flip: bool;
    match gate {
        Gate::H => {
            let (a, b) = (x.get(t[0]), z.get(t[0]));
            flip = a && b;
            x.set(t[0], b);
            z.set(t[0], a);
        }
        Gate::S => {
            let (a, b) = (x.get(t[0]), z.get(t[0]));
            flip = a && b;
            z.set(t[0], a ^ b);
        }
        Gate::X => flip = z.get(t[0]),
        Gate::Z => flip = x.get(t[0]),
        Gate::Y => flip = x.get(t[0]) ^ z.get(t[0]),
        Gate::Cnot => {
            let (c, tg) = (t[0], t[1]);
            let (xc, zc, xt, zt) = (x.get(c), z.get(c), x.get(tg), z.get(tg));
            flip = xc && zt && !(xt ^ zc);
            x.set(tg, xt ^ xc);
            z.set(c, zc ^ zt);
        }
        Gate::Cz => {
            // CZ = H_b CNOT_ab H_b
            let mut s = false;
            conjugate(x, z, Some(&mut s), Gate::H, &t[1..2]);
            let mut s2 = false;
            conjugate(x, z, Some(&mut s2), Gate::Cnot, t);
            let mut s3 = false;
            conjugate(x, z, Some(&mut s3), Gate::H, &t[1..2]);
            flip = s ^ s2 ^ s3;
        }
    }
    if let Some(sg) = sign {
        *sg ^= flip;
    }
}

impl PauliString {
    /// Conjugation `U P U†` by a single gate application.
    pub fn conjugate_by(&mut self, gate: Gate, targets: &[usize]) {
        let mut s = false;
        conjugate(&mut self.x, &mut self.z, Some(&mut s), gate, targets);
        self.sign.constant ^= s;
    }
}

/// Result of measuring a Pauli operator on a tableau.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasureOutcome {
    /// The outcome equals this parity of earlier outcomes.
    Deterministic(SymbolicSign),
    /// The outcome is uniformly random; it is recorded as a fresh symbol.
    Random,
}

/// Stabilizer tableau with destabilizers (Aaronson-Gottesman layout).
#[derive(Clone, Debug)]
pub struct Tableau {
    n: usize,
    stabs: Vec<PauliString>,
    destab_x: Vec<BitVec>,
    destab_z: Vec<BitVec>,
    age: Vec<u64>,
    clock: u64,
    next_hidden: usize,
    /// Measurement symbols at or above this index label the initial state and
    /// do not count as bound.
    input_base: usize,
}

impl Tableau {
    /// The state `|0...0>`.
    pub fn new(n: usize) -> Self {
        let stabs = (0..n)
            .map(|q| PauliString::single(n, q, PauliKind::Z))
            .collect();
        let destab_x = (0..n).map(|q| BitVec::from_indices(n, &[q])).collect();
        let destab_z = (0..n).map(|_| BitVec::zeros(n)).collect();
        Tableau {
            n,
            stabs,
            destab_x,
            destab_z,
            age: (0..n as u64).collect(),
            clock: n as u64,
            next_hidden: 0,
            input_base: usize::MAX,
        }
    }

    /// The state `|0...0>` with the sign of each initial `Z_q` labelled by
    /// measurement symbol `base + q`, so that predicted signs record how they
    /// depend on the initial state.
    pub fn with_input_symbols(n: usize, base: usize) -> Self {
        let mut t = Tableau::new(n);
        for (q, s) in t.stabs.iter_mut().enumerate() {
            s.sign = SymbolicSign::measurement(base + q);
        }
        t.input_base = base;
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.stabs
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn apply_clifford(&mut self, gate: Gate, targets: &[usize]) -> Result<(), PauliError> {
        gate.check_targets(targets, self.n)?;
        for t in targets.chunks(gate.arity()) {
            for s in &mut self.stabs {
                s.conjugate_by(gate, t);
            }
            for i in 0..self.n {
                conjugate(&mut self.destab_x[i], &mut self.destab_z[i], None, gate, t);
            }
        }
        Ok(())
    }

    fn check_operator(&self, p: &PauliString) -> Result<(), PauliError> {
        if p.n() != self.n {
            return Err(PauliError::SizeMismatch(p.n(), self.n));
        }
        Ok(())
    }

    /// Indices of generators whose product is `±p`, assuming `p` commutes
    /// with the group (and hence lies in it, the state being pure).
    fn decomposition(&self, p: &PauliString) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| symplectic(&self.destab_x[i], &self.destab_z[i], &p.x, &p.z))
            .collect()
    }

    fn product(&self, idx: &[usize]) -> PauliString {
        let mut acc = PauliString::identity(self.n);
        for &i in idx {
            acc = acc.mul(&self.stabs[i]).expect("sizes agree");
        }
        acc
    }

    /// Predicted sign of `p` if it is in the stabilizer group, without
    /// changing the state.
    pub fn peek(&self, p: &PauliString) -> Result<Option<SymbolicSign>, PauliError> {
        self.check_operator(p)?;
        if self.stabs.iter().any(|s| !s.commutes(p).unwrap()) {
            return Ok(None);
        }
        let prod = self.product(&self.decomposition(p));
        debug_assert!(prod.x == p.x && prod.z == p.z);
        Ok(Some(prod.sign))
    }

    /// Measures `p` (its sign is ignored). The outcome symbol is
    /// `m_{meas_index}`.
    pub fn measure(
        &mut self,
        p: &PauliString,
        meas_index: usize,
    ) -> Result<MeasureOutcome, PauliError> {
        self.measure_impl(p, SymbolicSign::measurement(meas_index), false)
    }

    /// Like [`measure`](Self::measure), but a deterministic outcome is also
    /// bound to `m_{meas_index}`: one generator of the decomposition is
    /// replaced by `p` carrying the sign `m_{meas_index}`. The group is
    /// unchanged in the noise-free circuit, and later predictions are written
    /// in terms of the most recent equivalent measurement.
    pub fn measure_and_bind(
        &mut self,
        p: &PauliString,
        meas_index: usize,
    ) -> Result<MeasureOutcome, PauliError> {
        self.measure_impl(p, SymbolicSign::measurement(meas_index), true)
    }

    fn measure_impl(
        &mut self,
        p: &PauliString,
        symbol: SymbolicSign,
        bind: bool,
    ) -> Result<MeasureOutcome, PauliError> {
        self.check_operator(p)?;
        let anti: Vec<usize> = (0..self.n)
            .filter(|&i| !self.stabs[i].commutes(p).unwrap())
            .collect();
        if let Some(&k) = anti.first() {
            self.replace_random(k, &anti[1..], p, symbol);
            return Ok(MeasureOutcome::Random);
        }
        let dec = self.decomposition(p);
        let sign = self.product(&dec).sign;
        if let Some(h) = sign.hidden_terms.iter().next() {
            // Eliminate h: every sign containing h is re-expressed through
            // the new outcome symbol.
            let mut delta = sign.clone();
            delta.xor_assign(&symbol);
            for s in &mut self.stabs {
                if s.sign.hidden_terms.contains(h) {
                    s.sign.xor_assign(&delta);
                }
            }
            return Ok(MeasureOutcome::Random);
        }
        if bind && !dec.is_empty() {
            let k = self.choose_replacement(&dec, p);
            let mut np = p.clone();
            np.sign = symbol;
            self.replace_in_decomposition(k, &dec, np);
        }
        Ok(MeasureOutcome::Deterministic(sign))
    }

    /// AG update for a measurement anticommuting with generator `k` (and
    /// with the generators in `others`).
    fn replace_random(&mut self, k: usize, others: &[usize], p: &PauliString, sign: SymbolicSign) {
        let pk = self.stabs[k].clone();
        for &i in others {
            self.stabs[i] = self.stabs[i].mul(&pk).unwrap();
        }
        for i in 0..self.n {
            if i != k && symplectic(&self.destab_x[i], &self.destab_z[i], &p.x, &p.z) {
                self.destab_x[i].xor_assign(&pk.x);
                self.destab_z[i].xor_assign(&pk.z);
            }
        }
        self.destab_x[k] = pk.x;
        self.destab_z[k] = pk.z;
        let mut np = p.clone();
        np.sign = sign;
        self.stabs[k] = np;
        self.age[k] = self.tick();
    }

    /// Preference for which generator of a decomposition gets replaced:
    /// least support overlap with `p`, then generators already carrying
    /// measurement symbols, then the most recently created.
    fn choose_replacement(&self, dec: &[usize], p: &PauliString) -> usize {
        let supp = p.support();
        *dec.iter()
            .min_by_key(|&&i| {
                let overlap = self.stabs[i].support().and(&supp).count_ones();
                let unbound = !self.stabs[i]
                    .sign
                    .measurement_terms
                    .iter()
                    .any(|m| m < self.input_base);
                (overlap, unbound, Reverse(self.age[i]))
            })
            .expect("nonempty decomposition")
    }

    fn replace_in_decomposition(&mut self, k: usize, dec: &[usize], np: PauliString) {
        for &j in dec {
            if j != k {
                let (dx, dz) = (self.destab_x[k].clone(), self.destab_z[k].clone());
                self.destab_x[j].xor_assign(&dx);
                self.destab_z[j].xor_assign(&dz);
            }
        }
        self.stabs[k] = np;
        self.age[k] = self.tick();
    }

    /// Resets qubit `q` to `|0>`. If `Z_q` was random, its discarded value is
    /// tracked as a hidden symbol in any generator that depended on it.
    pub fn reset(&mut self, q: usize) -> Result<(), PauliError> {
        if q >= self.n {
            return Err(PauliError::BadTarget { qubit: q, n: self.n });
        }
        let zq = PauliString::single(self.n, q, PauliKind::Z);
        let anti: Vec<usize> = (0..self.n)
            .filter(|&i| !self.stabs[i].commutes(&zq).unwrap())
            .collect();
        let k = if let Some(&k) = anti.first() {
            let h = self.next_hidden;
            self.next_hidden += 1;
            let sign = SymbolicSign {
                constant: false,
                measurement_terms: SymbolSet::new(),
                hidden_terms: SymbolSet::singleton(h),
            };
            self.replace_random(k, &anti[1..], &zq, sign);
            k
        } else {
            let dec = self.decomposition(&zq);
            let sign = self.product(&dec).sign;
            let k = self.choose_replacement(&dec, &zq);
            let mut np = zq.clone();
            np.sign = sign;
            self.replace_in_decomposition(k, &dec, np);
            k
        };
        // Remove q from every other generator, then fix the sign of Z_q.
        for i in 0..self.n {
            if i != k && self.stabs[i].z.get(q) {
                self.stabs[i] = self.stabs[i].mul(&self.stabs[k]).unwrap();
                let (dx, dz) = (self.destab_x[i].clone(), self.destab_z[i].clone());
                self.destab_x[k].xor_assign(&dx);
                self.destab_z[k].xor_assign(&dz);
            }
        }
        self.stabs[k].sign = SymbolicSign::default();
        self.age[k] = self.tick();
        Ok(())
    }

    /// Checks the tableau invariants: generators commute pairwise,
    /// destabilizers commute pairwise, and `destab_i` anticommutes with
    /// `stab_j` iff `i == j` (which implies independence).
    pub fn is_valid(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                let (s, t) = (&self.stabs[i], &self.stabs[j]);
                if symplectic(&s.x, &s.z, &t.x, &t.z) {
                    return false;
                }
                if symplectic(
                    &self.destab_x[i],
                    &self.destab_z[i],
                    &self.destab_x[j],
                    &self.destab_z[j],
                ) {
                    return false;
                }
                let a = symplectic(&self.destab_x[i], &self.destab_z[i], &t.x, &t.z);
                if a != (i == j) {
                    return false;
                }
            }
        }
        true
    }
}
