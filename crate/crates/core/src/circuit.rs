//! Circuit data model and the line-oriented `.qc` text format.
//!
//! ```text
//! QUBITS 3
//! R 0 1 2
//! X_ERROR(0.01) 0 1 2
//! MPP(0.01) Z0*Z1
//! MZ 0 1 2
//! OBSERVABLE m3
//! ```
//!
//! Qubits are 0-based. Measurements are numbered from 1 in program order and
//! referenced as `m<k>`. `DETECTOR` lines are optional; when absent, detectors
//! are derived automatically.

use std::fmt::Write as _;

use thiserror::Error;

use crate::pauli::{Gate, PauliKind, PauliString};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for {n} qubits")]
    TargetOutOfRange { qubit: usize, n: usize },
    #[error("invalid instruction: {0}")]
    Invalid(String),
    #[error("measurement reference m{index} but the circuit has {count} measurements")]
    BadMeasurementRef { index: usize, count: usize },
}

/// Pauli noise channels. Measurement flips are carried on the measurement
/// instruction itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    XError,
    YError,
    ZError,
    Depolarize1,
    Depolarize2,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::XError => "X_ERROR",
            NoiseKind::YError => "Y_ERROR",
            NoiseKind::ZError => "Z_ERROR",
            NoiseKind::Depolarize1 => "DEPOLARIZE1",
            NoiseKind::Depolarize2 => "DEPOLARIZE2",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "X_ERROR" => NoiseKind::XError,
            "Y_ERROR" => NoiseKind::YError,
            "Z_ERROR" => NoiseKind::ZError,
            "DEPOLARIZE1" => NoiseKind::Depolarize1,
            "DEPOLARIZE2" => NoiseKind::Depolarize2,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            NoiseKind::Depolarize2 => 2,
            _ => 1,
        }
    }

    /// The Pauli outcomes of one application, in the fixed enumeration
    /// order: `X, Y, Z` for one qubit, `IX, IY, ..., ZZ` for two.
    pub fn outcomes(self) -> Vec<Vec<PauliKind>> {
        use PauliKind::*;
        match self {
            NoiseKind::XError => vec![vec![X]],
            NoiseKind::YError => vec![vec![Y]],
            NoiseKind::ZError => vec![vec![Z]],
            NoiseKind::Depolarize1 => vec![vec![X], vec![Y], vec![Z]],
            NoiseKind::Depolarize2 => {
                let all = [I, X, Y, Z];
                let mut v = Vec::with_capacity(15);
                for a in all {
                    for b in all {
                        if (a, b) != (I, I) {
                            v.push(vec![a, b]);
                        }
                    }
                }
                v
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseChannel {
    pub kind: NoiseKind,
    pub p: f64,
}

/// A set of measurement indices (1-based) with an expected parity.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MeasurementSet {
    pub measurements: Vec<usize>,
    pub parity: bool,
}

pub type DetectorDecl = MeasurementSet;
pub type ObservableDecl = MeasurementSet;

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate { gate: Gate, targets: Vec<usize> },
    Reset { targets: Vec<usize> },
    MeasureZ { targets: Vec<usize>, flip: Option<f64> },
    MeasureX { targets: Vec<usize>, flip: Option<f64> },
    /// One measurement per product.
    MeasurePauli {
        products: Vec<Vec<(usize, PauliKind)>>,
        flip: Option<f64>,
    },
    Noise { channel: NoiseChannel, targets: Vec<usize> },
    Tick,
}

impl Instruction {
    /// Number of measurements this instruction performs.
    pub fn measurement_count(&self) -> usize {
        match self {
            Instruction::MeasureZ { targets, .. } | Instruction::MeasureX { targets, .. } => {
                targets.len()
            }
            Instruction::MeasurePauli { products, .. } => products.len(),
            _ => 0,
        }
    }

    /// The measured operators in order, for measurement instructions.
    pub fn measured_operators(&self, n: usize) -> Vec<PauliString> {
        match self {
            Instruction::MeasureZ { targets, .. } => targets
                .iter()
                .map(|&q| PauliString::single(n, q, PauliKind::Z))
                .collect(),
            Instruction::MeasureX { targets, .. } => targets
                .iter()
                .map(|&q| PauliString::single(n, q, PauliKind::X))
                .collect(),
            Instruction::MeasurePauli { products, .. } => products
                .iter()
                .map(|t| PauliString::from_sparse(n, t).expect("validated"))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn flip_prob(&self) -> Option<f64> {
        match self {
            Instruction::MeasureZ { flip, .. }
            | Instruction::MeasureX { flip, .. }
            | Instruction::MeasurePauli { flip, .. } => *flip,
            _ => None,
        }
    }

    /// Qubits the instruction acts on (for layer bookkeeping).
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Gate { targets, .. }
            | Instruction::Reset { targets }
            | Instruction::MeasureZ { targets, .. }
            | Instruction::MeasureX { targets, .. }
            | Instruction::Noise { targets, .. } => targets.clone(),
            Instruction::MeasurePauli { products, .. } => {
                products.iter().flatten().map(|&(q, _)| q).collect()
            }
            Instruction::Tick => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub instructions: Vec<Instruction>,
    pub declared_observables: Vec<ObservableDecl>,
    pub declared_detectors: Option<Vec<DetectorDecl>>,
}

fn check_prob(p: f64) -> Result<(), CircuitError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(CircuitError::Invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ..Default::default()
        }
    }

    pub fn measurement_count(&self) -> usize {
        self.instructions.iter().map(|i| i.measurement_count()).sum()
    }

    /// Appends an instruction after validating it.
    pub fn push(&mut self, inst: Instruction) -> Result<(), CircuitError> {
        self.validate_instruction(&inst)?;
        self.instructions.push(inst);
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<(), CircuitError> {
        if q >= self.n_qubits {
            return Err(CircuitError::TargetOutOfRange {
                qubit: q,
                n: self.n_qubits,
            });
        }
        Ok(())
    }

    fn validate_instruction(&self, inst: &Instruction) -> Result<(), CircuitError> {
        match inst {
            Instruction::Gate { gate, targets } => {
                for &q in targets {
                    self.check_qubit(q)?;
                }
                gate.check_targets(targets, self.n_qubits)
                    .map_err(|e| CircuitError::Invalid(e.to_string()))?;
            }
            Instruction::Reset { targets } => {
                if targets.is_empty() {
                    return Err(CircuitError::Invalid("R without targets".into()));
                }
                for &q in targets {
                    self.check_qubit(q)?;
                }
            }
            Instruction::MeasureZ { targets, flip } | Instruction::MeasureX { targets, flip } => {
                if targets.is_empty() {
                    return Err(CircuitError::Invalid("measurement without targets".into()));
                }
                for &q in targets {
                    self.check_qubit(q)?;
                }
                if let Some(p) = flip {
                    check_prob(*p)?;
                }
            }
            Instruction::MeasurePauli { products, flip } => {
                if products.is_empty() {
                    return Err(CircuitError::Invalid("MPP without products".into()));
                }
                for prod in products {
                    if prod.is_empty() {
                        return Err(CircuitError::Invalid("empty Pauli product".into()));
                    }
                    let mut seen = Vec::new();
                    for &(q, k) in prod {
                        self.check_qubit(q)?;
                        if k == PauliKind::I {
                            return Err(CircuitError::Invalid("identity term in MPP".into()));
                        }
                        if seen.contains(&q) {
                            return Err(CircuitError::Invalid(format!(
                                "qubit {q} repeated in Pauli product"
                            )));
                        }
                        seen.push(q);
                    }
                }
                if let Some(p) = flip {
                    check_prob(*p)?;
                }
            }
            Instruction::Noise { channel, targets } => {
                check_prob(channel.p)?;
                if targets.is_empty() || targets.len() % channel.kind.arity() != 0 {
                    return Err(CircuitError::Invalid(format!(
                        "{} needs targets in groups of {}",
                        channel.kind.name(),
                        channel.kind.arity()
                    )));
                }
                for &q in targets {
                    self.check_qubit(q)?;
                }
                if channel.kind.arity() == 2 {
                    for pair in targets.chunks(2) {
                        if pair[0] == pair[1] {
                            return Err(CircuitError::Invalid(format!(
                                "duplicate target {} in two-qubit channel",
                                pair[0]
                            )));
                        }
                    }
                }
            }
            Instruction::Tick => {}
        }
        Ok(())
    }

    /// Full structural validation, including declaration references.
    pub fn validate(&self) -> Result<(), CircuitError> {
        for inst in &self.instructions {
            self.validate_instruction(inst)?;
        }
        let m = self.measurement_count();
        let decls = self
            .declared_observables
            .iter()
            .chain(self.declared_detectors.iter().flatten());
        for d in decls {
            for &i in &d.measurements {
                if i == 0 || i > m {
                    return Err(CircuitError::BadMeasurementRef { index: i, count: m });
                }
            }
        }
        Ok(())
    }

    /// Same circuit with all noise removed.
    pub fn without_noise(&self) -> Circuit {
        let mut c = self.clone();
        c.instructions = self
            .instructions
            .iter()
            .filter(|i| !matches!(i, Instruction::Noise { .. }))
            .cloned()
            .map(|i| match i {
                Instruction::MeasureZ { targets, .. } => Instruction::MeasureZ { targets, flip: None },
                Instruction::MeasureX { targets, .. } => Instruction::MeasureX { targets, flip: None },
                Instruction::MeasurePauli { products, .. } => {
                    Instruction::MeasurePauli { products, flip: None }
                }
                other => other,
            })
            .collect();
        c
    }

    /// Canonical text form.
    pub fn print(&self) -> String {
        print(self)
    }
}

fn fmt_prob(p: f64) -> String {
    format!("{p:?}")
}

fn join(ts: &[usize]) -> String {
    ts.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ")
}

fn fmt_product(prod: &[(usize, PauliKind)]) -> String {
    prod.iter()
        .map(|(q, k)| format!("{}{}", k.letter(), q))
        .collect::<Vec<_>>()
        .join("*")
}

fn fmt_refs(d: &MeasurementSet) -> String {
    d.measurements
        .iter()
        .map(|i| format!(" m{i}"))
        .collect::<String>()
}

/// Canonical text: `QUBITS n`, the instructions, then detector and
/// observable declarations.
pub fn print(c: &Circuit) -> String {
    let mut out = String::new();
    writeln!(out, "QUBITS {}", c.n_qubits).unwrap();
    for inst in &c.instructions {
        let flip = |f: &Option<f64>| f.map(|p| format!("({})", fmt_prob(p))).unwrap_or_default();
        match inst {
            Instruction::Gate { gate, targets } => {
                writeln!(out, "{} {}", gate.name(), join(targets)).unwrap()
            }
            Instruction::Reset { targets } => writeln!(out, "R {}", join(targets)).unwrap(),
            Instruction::MeasureZ { targets, flip: f } => {
                writeln!(out, "MZ{} {}", flip(f), join(targets)).unwrap()
            }
            Instruction::MeasureX { targets, flip: f } => {
                writeln!(out, "MX{} {}", flip(f), join(targets)).unwrap()
            }
            Instruction::MeasurePauli { products, flip: f } => {
                let ps: Vec<String> = products.iter().map(|p| fmt_product(p)).collect();
                writeln!(out, "MPP{} {}", flip(f), ps.join(" ")).unwrap()
            }
            Instruction::Noise { channel, targets } => writeln!(
                out,
                "{}({}) {}",
                channel.kind.name(),
                fmt_prob(channel.p),
                join(targets)
            )
            .unwrap(),
            Instruction::Tick => writeln!(out, "TICK").unwrap(),
        }
    }
    for d in c.declared_detectors.iter().flatten() {
        if d.parity {
            writeln!(out, "DETECTOR(1){}", fmt_refs(d)).unwrap();
        } else {
            writeln!(out, "DETECTOR{}", fmt_refs(d)).unwrap();
        }
    }
    for o in &c.declared_observables {
        writeln!(out, "OBSERVABLE{}", fmt_refs(o)).unwrap();
    }
    out
}

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &body[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &body[s..],
            col: s + 1,
        });
    }
    out
}

/// Parses `.qc` text.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut c = Circuit::default();
    let mut declared_n: Option<usize> = None;
    let mut max_target: Option<usize> = None;
    let mut detectors: Vec<DetectorDecl> = Vec::new();
    let mut ref_positions: Vec<(usize, usize, usize)> = Vec::new();
    let mut saw_instruction = false;

    for (li, line) in text.lines().enumerate() {
        let lineno = li + 1;
        let toks = tokenize(line);
        let Some(head) = toks.first() else { continue };
        let err = |col: usize, msg: String| ParseError {
            line: lineno,
            col,
            message: msg,
        };
        let code = line.split('#').next().unwrap_or("");
        if let Some((i, ch)) = code
            .char_indices()
            .find(|(_, ch)| !(ch.is_ascii_graphic() || ch.is_whitespace()))
        {
            return Err(err(i + 1, format!("unexpected character `{ch}`")));
        }
        let (name, arg) = split_name(head.text).map_err(|m| err(head.col, m))?;
        let arg_col = head.col + name.len() + 1;
        let rest = &toks[1..];

        let check_range = |q: usize, col: usize| -> Result<(), ParseError> {
            match declared_n {
                Some(n) if q >= n => Err(err(col, format!("target {q} out of range for {n} qubits"))),
                _ => Ok(()),
            }
        };
        let parse_targets = |rest: &[Token]| -> Result<Vec<usize>, ParseError> {
            rest.iter()
                .map(|t| {
                    let q = t
                        .text
                        .parse::<usize>()
                        .map_err(|_| err(t.col, format!("expected qubit index, got `{}`", t.text)))?;
                    check_range(q, t.col)?;
                    Ok(q)
                })
                .collect()
        };
        let parse_prob = |a: Option<&str>, required: bool| -> Result<Option<f64>, ParseError> {
            match a {
                None if required => Err(err(arg_col, format!("{name} requires a probability"))),
                None => Ok(None),
                Some(s) => {
                    let p: f64 = s
                        .trim()
                        .parse()
                        .map_err(|_| err(arg_col, format!("malformed probability `{s}`")))?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(err(arg_col, format!("probability {p} outside [0, 1]")));
                    }
                    Ok(Some(p))
                }
            }
        };

        let mut note_targets = |ts: &[usize]| {
            for &q in ts {
                max_target = Some(max_target.map_or(q, |m| m.max(q)));
            }
        };

        let inst = match name {
            "QUBITS" => {
                if declared_n.is_some() {
                    return Err(err(head.col, "duplicate QUBITS line".into()));
                }
                if saw_instruction {
                    return Err(err(head.col, "QUBITS must precede all instructions".into()));
                }
                if rest.len() != 1 || arg.is_some() {
                    return Err(err(head.col, "expected `QUBITS n`".into()));
                }
                let n = rest[0]
                    .text
                    .parse::<usize>()
                    .map_err(|_| err(rest[0].col, "expected qubit count".into()))?;
                declared_n = Some(n);
                continue;
            }
            "TICK" => {
                if !rest.is_empty() || arg.is_some() {
                    return Err(err(head.col, "TICK takes no arguments".into()));
                }
                Instruction::Tick
            }
            "DETECTOR" | "OBSERVABLE" => {
                let parity = match (name, arg) {
                    (_, None) => false,
                    ("DETECTOR", Some("0")) => false,
                    ("DETECTOR", Some("1")) => true,
                    ("DETECTOR", Some(a)) => {
                        return Err(err(arg_col, format!("detector parity must be 0 or 1, got `{a}`")))
                    }
                    (_, Some(_)) => {
                        return Err(err(arg_col, "OBSERVABLE takes no argument".into()))
                    }
                };
                let mut ms = Vec::new();
                for t in rest {
                    let idx = t
                        .text
                        .strip_prefix('m')
                        .and_then(|s| s.parse::<usize>().ok())
                        .filter(|&i| i >= 1)
                        .ok_or_else(|| {
                            err(t.col, format!("expected measurement reference m<k>, got `{}`", t.text))
                        })?;
                    ref_positions.push((lineno, t.col, idx));
                    ms.push(idx);
                }
                if ms.is_empty() {
                    return Err(err(head.col, format!("{name} needs at least one reference")));
                }
                let decl = MeasurementSet {
                    measurements: ms,
                    parity,
                };
                if name == "DETECTOR" {
                    detectors.push(decl);
                } else {
                    c.declared_observables.push(decl);
                }
                continue;
            }
            "R" => {
                if arg.is_some() {
                    return Err(err(arg_col, "R takes no argument".into()));
                }
                let targets = parse_targets(rest)?;
                if targets.is_empty() {
                    return Err(err(head.col, "R needs targets".into()));
                }
                note_targets(&targets);
                Instruction::Reset { targets }
            }
            "MZ" | "M" | "MX" => {
                let flip = parse_prob(arg, false)?;
                let targets = parse_targets(rest)?;
                if targets.is_empty() {
                    return Err(err(head.col, format!("{name} needs targets")));
                }
                note_targets(&targets);
                if name == "MX" {
                    Instruction::MeasureX { targets, flip }
                } else {
                    Instruction::MeasureZ { targets, flip }
                }
            }
            "MPP" => {
                let flip = parse_prob(arg, false)?;
                let mut products = Vec::new();
                for t in rest {
                    let prod = parse_product(t.text).map_err(|m| err(t.col, m))?;
                    let qs: Vec<usize> = prod.iter().map(|p| p.0).collect();
                    for &q in &qs {
                        check_range(q, t.col)?;
                    }
                    note_targets(&qs);
                    products.push(prod);
                }
                if products.is_empty() {
                    return Err(err(head.col, "MPP needs a Pauli product".into()));
                }
                Instruction::MeasurePauli { products, flip }
            }
            _ => {
                if let Some(kind) = NoiseKind::from_name(name) {
                    let p = parse_prob(arg, true)?.unwrap();
                    let targets = parse_targets(rest)?;
                    if targets.is_empty() || targets.len() % kind.arity() != 0 {
                        return Err(err(
                            head.col,
                            format!("{name} needs targets in groups of {}", kind.arity()),
                        ));
                    }
                    if kind.arity() == 2 {
                        for (k, pair) in targets.chunks(2).enumerate() {
                            if pair[0] == pair[1] {
                                return Err(err(rest[2 * k + 1].col, "duplicate target".into()));
                            }
                        }
                    }
                    note_targets(&targets);
                    Instruction::Noise {
                        channel: NoiseChannel { kind, p },
                        targets,
                    }
                } else if let Ok(gate) = Gate::from_name(name) {
                    if arg.is_some() {
                        return Err(err(arg_col, format!("{name} takes no argument")));
                    }
                    let targets = parse_targets(rest)?;
                    if targets.is_empty() || targets.len() % gate.arity() != 0 {
                        return Err(err(
                            head.col,
                            format!("{name} needs targets in groups of {}", gate.arity()),
                        ));
                    }
                    if gate.arity() == 2 {
                        for (k, pair) in targets.chunks(2).enumerate() {
                            if pair[0] == pair[1] {
                                return Err(err(rest[2 * k + 1].col, "duplicate target".into()));
                            }
                        }
                    }
                    note_targets(&targets);
                    Instruction::Gate { gate, targets }
                } else {
                    return Err(err(head.col, format!("unknown gate `{name}`")));
                }
            }
        };
        saw_instruction = true;
        c.instructions.push(inst);
    }

    c.n_qubits = declared_n.unwrap_or_else(|| max_target.map_or(0, |m| m + 1));
    let m = c.measurement_count();
    for (line, col, idx) in ref_positions {
        if idx > m {
            return Err(ParseError {
                line,
                col,
                message: format!("measurement m{idx} does not exist ({m} measurements)"),
            });
        }
    }
    if !detectors.is_empty() {
        c.declared_detectors = Some(detectors);
    }
    Ok(c)
}

fn split_name(tok: &str) -> Result<(&str, Option<&str>), String> {
    match tok.find('(') {
        None => Ok((tok, None)),
        Some(i) => {
            if !tok.ends_with(')') {
                return Err(format!("unterminated argument in `{tok}`"));
            }
            Ok((&tok[..i], Some(&tok[i + 1..tok.len() - 1])))
        }
    }
}

pub(crate) fn parse_product(s: &str) -> Result<Vec<(usize, PauliKind)>, String> {
    let mut out: Vec<(usize, PauliKind)> = Vec::new();
    for term in s.split('*') {
        let mut chars = term.chars();
        let kind = chars
            .next()
            .and_then(PauliKind::from_letter)
            .filter(|k| *k != PauliKind::I)
            .ok_or_else(|| format!("bad Pauli term `{term}`"))?;
        let q: usize = chars
            .as_str()
            .parse()
            .map_err(|_| format!("bad qubit in Pauli term `{term}`"))?;
        if out.iter().any(|&(p, _)| p == q) {
            return Err(format!("qubit {q} repeated in Pauli product"));
        }
        out.push((q, kind));
    }
    Ok(out)
}
