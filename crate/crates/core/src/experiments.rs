//! Circuit builders, circuit-level noise models, seeded Monte Carlo sampling
//! and teraquop extrapolation.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Instruction, MeasurementSet, NoiseChannel, NoiseKind};
use crate::decoder::{Decoder, DecoderError, DecoderKind};
use crate::dem::{xor_prob, DemError, DetectorErrorModel};
use crate::detectors::{analyze, DetectorError};
use crate::frames::{build_syndrome_matrix, enumerate_errors, ExtractionSpec};
use crate::gf2::BitVec;
use crate::pauli::{Gate, PauliKind, PauliString};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Dem(#[from] DemError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error("rates must decrease with distance")]
    NonDecreasing,
}

/// Circuit-level noise families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum NoiseSpec {
    /// Standard depolarizing with measurement bias `eta`.
    Sdmb { p: f64, eta: f64 },
    /// Superconducting inspired.
    Si { p: f64 },
    /// Measurement flips only.
    MeasurementOnly { p: f64 },
    Noiseless,
}

/// Per-operation probabilities of a [`NoiseSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseRates {
    pub single: f64,
    pub two: f64,
    pub init: f64,
    pub measure: f64,
    pub idle: f64,
    /// Idle during a layer that measures or resets.
    pub resonator_idle: f64,
}

impl NoiseSpec {
    pub fn rates(&self) -> NoiseRates {
        match *self {
            NoiseSpec::Sdmb { p, eta } => NoiseRates {
                single: p,
                two: p,
                init: p,
                measure: eta * p,
                idle: p,
                resonator_idle: 0.0,
            },
            NoiseSpec::Si { p } => NoiseRates {
                single: p / 10.0,
                two: p,
                init: 2.0 * p,
                measure: 5.0 * p,
                idle: p / 10.0,
                resonator_idle: 2.0 * p,
            },
            NoiseSpec::MeasurementOnly { p } => NoiseRates {
                single: 0.0,
                two: 0.0,
                init: 0.0,
                measure: p,
                idle: 0.0,
                resonator_idle: 0.0,
            },
            NoiseSpec::Noiseless => NoiseRates {
                single: 0.0,
                two: 0.0,
                init: 0.0,
                measure: 0.0,
                idle: 0.0,
                resonator_idle: 0.0,
            },
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let r = self.rates();
        for (name, v) in [
            ("single", r.single),
            ("two", r.two),
            ("init", r.init),
            ("measure", r.measure),
            ("idle", r.idle),
            ("resonator idle", r.resonator_idle),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ExperimentError::Invalid(format!(
                    "{name} probability {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for NoiseSpec {
    type Err = String;

    /// `sdmb:p,eta`, `si:p`, `meas:p` or `none`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Result<Vec<f64>, _> = args
            .split(',')
            .filter(|a| !a.is_empty())
            .map(|a| a.trim().parse::<f64>())
            .collect();
        let nums = nums.map_err(|e| format!("bad noise parameter in '{s}': {e}"))?;
        let spec = match (family.to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("sdmb", [p, eta]) => NoiseSpec::Sdmb { p: *p, eta: *eta },
            ("sdmb", [p]) => NoiseSpec::Sdmb { p: *p, eta: 1.0 },
            ("si", [p]) => NoiseSpec::Si { p: *p },
            ("meas", [p]) => NoiseSpec::MeasurementOnly { p: *p },
            ("none", []) => NoiseSpec::Noiseless,
            _ => return Err(format!("bad noise spec '{s}' (sdmb:p,eta | si:p | meas:p | none)")),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

fn noise(kind: NoiseKind, p: f64, targets: Vec<usize>) -> Instruction {
    Instruction::Noise {
        channel: NoiseChannel { kind, p },
        targets,
    }
}

/// Inserts noise into a noiseless circuit whose layers are separated by
/// `TICK`. Gates get depolarizing noise after them, resets an X error,
/// measurements a flip probability, and qubits untouched by a layer idle
/// noise. Qubits used before any reset start with an initialization error.
pub fn apply_noise(c: &Circuit, spec: &NoiseSpec) -> Result<Circuit, ExperimentError> {
    spec.validate()?;
    let r = spec.rates();
    let mut out = Circuit {
        n_qubits: c.n_qubits,
        instructions: Vec::new(),
        declared_observables: c.declared_observables.clone(),
        declared_detectors: c.declared_detectors.clone(),
    };

    if r.init > 0.0 {
        let mut first_reset = vec![None::<bool>; c.n_qubits];
        for inst in &c.instructions {
            let is_reset = matches!(inst, Instruction::Reset { .. });
            for q in inst.qubits() {
                first_reset[q].get_or_insert(is_reset);
            }
        }
        let fresh: Vec<usize> = (0..c.n_qubits)
            .filter(|&q| first_reset[q] == Some(false))
            .collect();
        if !fresh.is_empty() {
            out.instructions.push(noise(NoiseKind::XError, r.init, fresh));
        }
    }

    let mut touched = vec![false; c.n_qubits];
    let mut layer_used = false;
    let mut resonator = false;
    let close_layer = |out: &mut Circuit, touched: &mut Vec<bool>, resonator: bool| {
        let p = if resonator { r.resonator_idle } else { r.idle };
        let idle: Vec<usize> = (0..touched.len()).filter(|&q| !touched[q]).collect();
        if p > 0.0 && !idle.is_empty() {
            out.instructions.push(noise(NoiseKind::Depolarize1, p, idle));
        }
        touched.iter_mut().for_each(|t| *t = false);
    };

    for inst in &c.instructions {
        if let Instruction::Tick = inst {
            if layer_used {
                close_layer(&mut out, &mut touched, resonator);
            }
            out.instructions.push(Instruction::Tick);
            layer_used = false;
            resonator = false;
            continue;
        }
        layer_used = true;
        for q in inst.qubits() {
            touched[q] = true;
        }
        match inst {
            Instruction::Gate { gate, targets } => {
                out.instructions.push(inst.clone());
                match gate {
                    Gate::Cnot | Gate::Cz if r.two > 0.0 => {
                        out.instructions
                            .push(noise(NoiseKind::Depolarize2, r.two, targets.clone()));
                    }
                    Gate::Cnot | Gate::Cz => {}
                    _ if r.single > 0.0 => {
                        out.instructions
                            .push(noise(NoiseKind::Depolarize1, r.single, targets.clone()));
                    }
                    _ => {}
                }
            }
            Instruction::Reset { targets } => {
                resonator = true;
                out.instructions.push(inst.clone());
                if r.init > 0.0 {
                    out.instructions
                        .push(noise(NoiseKind::XError, r.init, targets.clone()));
                }
            }
            Instruction::MeasureZ { .. }
            | Instruction::MeasureX { .. }
            | Instruction::MeasurePauli { .. } => {
                resonator = true;
                let mut m = inst.clone();
                let combined = match inst.flip_prob() {
                    Some(p0) => xor_prob(p0, r.measure),
                    None => r.measure,
                };
                let flip = (combined > 0.0).then_some(combined);
                match &mut m {
                    Instruction::MeasureZ { flip: f, .. }
                    | Instruction::MeasureX { flip: f, .. }
                    | Instruction::MeasurePauli { flip: f, .. } => *f = flip,
                    _ => unreachable!(),
                }
                out.instructions.push(m);
            }
            _ => out.instructions.push(inst.clone()),
        }
    }
    if layer_used {
        close_layer(&mut out, &mut touched, resonator);
    }
    out.validate()?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CodeFamily {
    Repetition,
    Surface,
}

impl std::str::FromStr for CodeFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "repetition" | "rep" => Ok(CodeFamily::Repetition),
            "surface" => Ok(CodeFamily::Surface),
            other => Err(format!("unknown code '{other}' (repetition, surface)")),
        }
    }
}

/// One auxiliary qubit per stabilizer per round, or two measured back to back.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Extraction {
    Single,
    Double,
}

impl Extraction {
    fn passes(self) -> usize {
        match self {
            Extraction::Single => 1,
            Extraction::Double => 2,
        }
    }
}

impl std::str::FromStr for Extraction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" | "standard" => Ok(Extraction::Single),
            "double" => Ok(Extraction::Double),
            other => Err(format!("unknown extraction '{other}' (single, double)")),
        }
    }
}

/// Physical qubits of a memory circuit, auxiliary qubits included.
pub fn qubit_count(code: CodeFamily, d: usize, extraction: Extraction) -> usize {
    let (data, stabs) = match code {
        CodeFamily::Repetition => (d, d.saturating_sub(1)),
        CodeFamily::Surface => (d * d, (d * d).saturating_sub(1)),
    };
    data + extraction.passes() * stabs
}

/// A stabilizer to extract: its type and the data qubit coupled in each
/// CNOT layer.
#[derive(Clone, Debug)]
struct Stab {
    kind: PauliKind,
    layers: Vec<Option<usize>>,
}

impl Stab {
    fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().flatten().copied().collect();
        s.sort_unstable();
        s
    }
}

#[derive(Clone, Debug)]
struct Patch {
    n_data: usize,
    stabs: Vec<Stab>,
}

fn repetition_patch(d: usize) -> Patch {
    Patch {
        n_data: d,
        stabs: (0..d - 1)
            .map(|i| Stab {
                kind: PauliKind::Z,
                layers: vec![Some(i), Some(i + 1)],
            })
            .collect(),
    }
}

/// Rotated layout on a `d x d` grid. Plaquette `(i, j)` covers data
/// `(i, j), (i, j+1), (i+1, j), (i+1, j+1)` and is X-type when `i + j` is
/// even. Memory patches keep X-type weight-2 plaquettes on the top and
/// bottom edges and Z-type on the left and right; stability patches keep
/// only Z-type boundary plaquettes.
fn surface_patch(d: usize, stability: bool) -> Patch {
    let di = d as isize;
    let q = |i: isize, j: isize| -> Option<usize> {
        (0..di).contains(&i).then_some(())?;
        (0..di).contains(&j).then_some(())?;
        Some((i * di + j) as usize)
    };
    let mut stabs = Vec::new();
    for i in -1..di {
        for j in -1..di {
            let kind = if (i + j).rem_euclid(2) == 0 {
                PauliKind::X
            } else {
                PauliKind::Z
            };
            let vertical_edge = j == -1 || j == di - 1;
            let horizontal_edge = i == -1 || i == di - 1;
            if vertical_edge && horizontal_edge {
                continue;
            }
            let keep = if !(vertical_edge || horizontal_edge) {
                true
            } else if stability {
                kind == PauliKind::Z
            } else if horizontal_edge {
                kind == PauliKind::X
            } else {
                kind == PauliKind::Z
            };
            if !keep {
                continue;
            }
            let (nw, ne, sw, se) = (q(i, j), q(i, j + 1), q(i + 1, j), q(i + 1, j + 1));
            // Hook errors of X-type checks end up horizontal, across the
            // vertical X logical.
            let layers = match kind {
                PauliKind::X => vec![nw, ne, sw, se],
                _ => vec![nw, sw, ne, se],
            };
            stabs.push(Stab { kind, layers });
        }
    }
    Patch {
        n_data: d * d,
        stabs,
    }
}

enum Readout {
    /// Data start in `|0..0>` and are measured in Z; the observable is the
    /// product over `logical`.
    Memory { logical: Vec<usize> },
    /// Data start in `|+..+>` and are measured in X; with `observable`, the
    /// observable is the first-round product of all Z-type checks.
    Timelike { observable: bool },
    /// Data start in `|+..+>` and are never measured.
    ChecksOnly,
}

/// Noiseless repeated extraction with declared comparison detectors.
///
/// Every round resets all auxiliary qubits, couples each stabilizer to one
/// auxiliary qubit per pass (pass after pass) and measures them all. The
/// outcomes of one stabilizer form a time-ordered chain; consecutive
/// outcomes are compared, the first is a detector on its own when the
/// initial state fixes it, and the last is compared against the final data
/// readout when that readout determines it.
fn emit_extraction(patch: &Patch, rounds: usize, extraction: Extraction, readout: Readout) -> Circuit {
    let nd = patch.n_data;
    let ns = patch.stabs.len();
    let passes = extraction.passes();
    let mut c = Circuit::new(nd + passes * ns);
    let anc = |pass: usize, s: usize| nd + pass * ns + s;
    let timelike = !matches!(readout, Readout::Memory { .. });
    let readout_data = !matches!(readout, Readout::ChecksOnly);
    let stable_kind = if timelike { PauliKind::X } else { PauliKind::Z };
    let push = |c: &mut Circuit, inst: Instruction| c.instructions.push(inst);

    if timelike {
        push(&mut c, Instruction::Gate { gate: Gate::H, targets: (0..nd).collect() });
        push(&mut c, Instruction::Tick);
    }

    let x_anc: Vec<usize> = (0..passes)
        .flat_map(|pass| {
            patch
                .stabs
                .iter()
                .enumerate()
                .filter(|(_, s)| s.kind == PauliKind::X)
                .map(move |(i, _)| anc(pass, i))
        })
        .collect();
    let all_anc: Vec<usize> = (nd..nd + passes * ns).collect();
    let depth = patch.stabs.iter().map(|s| s.layers.len()).max().unwrap_or(0);

    for _ in 0..rounds {
        push(&mut c, Instruction::Reset { targets: all_anc.clone() });
        push(&mut c, Instruction::Tick);
        if !x_anc.is_empty() {
            push(&mut c, Instruction::Gate { gate: Gate::H, targets: x_anc.clone() });
            push(&mut c, Instruction::Tick);
        }
        for pass in 0..passes {
            for k in 0..depth {
                let mut targets = Vec::new();
                for (s, stab) in patch.stabs.iter().enumerate() {
                    if let Some(Some(dq)) = stab.layers.get(k) {
                        match stab.kind {
                            PauliKind::X => targets.extend([anc(pass, s), *dq]),
                            _ => targets.extend([*dq, anc(pass, s)]),
                        }
                    }
                }
                if !targets.is_empty() {
                    push(&mut c, Instruction::Gate { gate: Gate::Cnot, targets });
                    push(&mut c, Instruction::Tick);
                }
            }
        }
        if !x_anc.is_empty() {
            push(&mut c, Instruction::Gate { gate: Gate::H, targets: x_anc.clone() });
            push(&mut c, Instruction::Tick);
        }
        push(
            &mut c,
            Instruction::MeasureZ { targets: all_anc.clone(), flip: None },
        );
        push(&mut c, Instruction::Tick);
    }
    // Auxiliary outcomes are numbered pass-major within each round.
    let per_round = passes * ns;
    let meas = rounds * per_round;
    let mut chains: Vec<Vec<usize>> = vec![Vec::new(); ns];
    for r in 0..rounds {
        for pass in 0..passes {
            for (s, chain) in chains.iter_mut().enumerate() {
                chain.push(r * per_round + pass * ns + s + 1);
            }
        }
    }

    let data: Vec<usize> = (0..nd).collect();
    if readout_data {
        let inst = if timelike {
            Instruction::MeasureX { targets: data, flip: None }
        } else {
            Instruction::MeasureZ { targets: data, flip: None }
        };
        push(&mut c, inst);
    }
    let data_meas = |q: usize| meas + q + 1;

    let mut dets = Vec::new();
    for (s, stab) in patch.stabs.iter().enumerate() {
        let chain = &chains[s];
        if stab.kind == stable_kind {
            if let Some(&first) = chain.first() {
                dets.push(MeasurementSet { measurements: vec![first], parity: false });
            }
        }
        for w in chain.windows(2) {
            dets.push(MeasurementSet { measurements: w.to_vec(), parity: false });
        }
        if readout_data && stab.kind == stable_kind {
            let mut ms: Vec<usize> = chain.last().copied().into_iter().collect();
            ms.extend(stab.support().into_iter().map(data_meas));
            dets.push(MeasurementSet { measurements: ms, parity: false });
        }
    }
    c.declared_detectors = Some(dets);

    match readout {
        Readout::Memory { logical } => {
            c.declared_observables.push(MeasurementSet {
                measurements: logical.into_iter().map(data_meas).collect(),
                parity: false,
            });
        }
        Readout::Timelike { observable: true } if rounds > 0 => {
            let ms: Vec<usize> = patch
                .stabs
                .iter()
                .enumerate()
                .filter(|(_, s)| s.kind == PauliKind::Z)
                .map(|(s, _)| chains[s][0])
                .collect();
            c.declared_observables.push(MeasurementSet { measurements: ms, parity: false });
        }
        Readout::Timelike { .. } | Readout::ChecksOnly => {}
    }
    c
}

fn check_rounds(rounds: usize) -> Result<(), ExperimentError> {
    if rounds == 0 {
        return Err(ExperimentError::Invalid("rounds must be at least 1".into()));
    }
    Ok(())
}

/// Logical `|0>` memory experiment. Data qubits are left in their initial
/// `|0>` state rather than reset so the logical value stays symbolic for
/// detector derivation.
pub fn build_memory_circuit(
    code: CodeFamily,
    d: usize,
    rounds: usize,
    extraction: Extraction,
    noise: &NoiseSpec,
) -> Result<Circuit, ExperimentError> {
    if d < 3 || d % 2 == 0 {
        return Err(ExperimentError::Invalid(format!("distance must be odd and >= 3, got {d}")));
    }
    check_rounds(rounds)?;
    let (patch, logical) = match code {
        CodeFamily::Repetition => (repetition_patch(d), vec![0]),
        CodeFamily::Surface => (surface_patch(d, false), (0..d).collect()),
    };
    let c = emit_extraction(&patch, rounds, extraction, Readout::Memory { logical });
    apply_noise(&c, noise)
}

/// Z-stability experiment on a `d x d` patch (even `d`) whose boundaries
/// all carry Z-type checks, so the product of all Z-type checks is the
/// identity. The observable is that product in the first round.
pub fn build_stability_circuit(
    d: usize,
    rounds: usize,
    extraction: Extraction,
    noise: &NoiseSpec,
) -> Result<Circuit, ExperimentError> {
    if d < 2 || d % 2 == 1 {
        return Err(ExperimentError::Invalid(format!(
            "stability patch diameter must be even and >= 2, got {d}"
        )));
    }
    check_rounds(rounds)?;
    let patch = surface_patch(d, true);
    let c = emit_extraction(&patch, rounds, extraction, Readout::Timelike { observable: true });
    apply_noise(&c, noise)
}

/// One weight-`weight` Z check measured `rounds` times on data of unknown
/// parity, with comparison detectors only and no final data readout.
pub fn build_repeated_check_circuit(
    weight: usize,
    rounds: usize,
    extraction: Extraction,
    noise: &NoiseSpec,
) -> Result<Circuit, ExperimentError> {
    if weight == 0 {
        return Err(ExperimentError::Invalid("check weight must be positive".into()));
    }
    check_rounds(rounds)?;
    let patch = Patch {
        n_data: weight,
        stabs: vec![Stab {
            kind: PauliKind::Z,
            layers: (0..weight).map(Some).collect(),
        }],
    };
    let c = emit_extraction(&patch, rounds, extraction, Readout::ChecksOnly);
    apply_noise(&c, noise)
}

/// Shor-style extraction of `Z` on four data qubits using a cat state that
/// is verified by one extra qubit. Every preparation, gate and measurement
/// carries probability-`p` depolarizing noise (flip for measurements).
/// The verifier outcome is `m1`; a 1 there aborts the run.
pub fn build_shor_extraction(targets: &[usize], p: f64) -> Result<Circuit, ExperimentError> {
    if targets.len() != 4 {
        return Err(ExperimentError::Invalid(format!(
            "Shor extraction needs 4 data qubits, got {}",
            targets.len()
        )));
    }
    let distinct: HashSet<usize> = targets.iter().copied().collect();
    if distinct.len() != 4 {
        return Err(ExperimentError::Invalid("data qubits must be distinct".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(ExperimentError::Invalid(format!("probability {p} outside [0, 1]")));
    }
    let base = targets.iter().max().unwrap() + 1;
    let cat: Vec<usize> = (base..base + 4).collect();
    let verifier = base + 4;
    let mut c = Circuit::new(base + 5);
    let dep1 = |t: Vec<usize>| noise(NoiseKind::Depolarize1, p, t);
    let dep2 = |a: usize, b: usize| noise(NoiseKind::Depolarize2, p, vec![a, b]);
    let cnot = |a: usize, b: usize| Instruction::Gate {
        gate: Gate::Cnot,
        targets: vec![a, b],
    };

    let mut prep: Vec<usize> = cat.clone();
    prep.push(verifier);
    c.push(dep1(prep))?;
    c.push(Instruction::Gate { gate: Gate::H, targets: vec![cat[0]] })?;
    c.push(dep1(vec![cat[0]]))?;
    for (a, b) in [
        (cat[0], cat[1]),
        (cat[1], cat[2]),
        (cat[2], cat[3]),
        (cat[0], verifier),
        (cat[3], verifier),
    ] {
        c.push(cnot(a, b))?;
        c.push(dep2(a, b))?;
    }
    c.push(Instruction::MeasureZ { targets: vec![verifier], flip: Some(p) })?;
    c.push(Instruction::Gate { gate: Gate::H, targets: cat.clone() })?;
    c.push(dep1(cat.clone()))?;
    for (&dq, &cq) in targets.iter().zip(&cat) {
        c.push(cnot(dq, cq))?;
        c.push(dep2(dq, cq))?;
    }
    c.push(Instruction::MeasureZ { targets: cat, flip: Some(p) })?;
    Ok(c)
}

/// Extraction spec matching [`build_shor_extraction`].
pub fn shor_extraction_spec(targets: &[usize]) -> ExtractionSpec {
    ExtractionSpec {
        data_qubits: targets.to_vec(),
        stabilizers: vec![PauliString::from_sparse(
            targets.len(),
            &(0..targets.len()).map(|i| (i, PauliKind::Z)).collect::<Vec<_>>(),
        )
        .expect("in range")],
        postselect: vec![1],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    /// Shots that were decoded (aborted shots excluded).
    pub shots: u64,
    pub logical_errors: u64,
    pub rate: f64,
    pub ci95: (f64, f64),
    pub seed: u64,
    pub aborted: u64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n_f = n as f64;
    let phat = k as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let centre = (phat + z * z / (2.0 * n_f)) / denom;
    let half = z * (phat * (1.0 - phat) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, Default)]
pub struct SampleOptions {
    /// Stop once this many logical errors are seen.
    pub max_errors: Option<u64>,
    /// Measurements (1-based) whose detectors abort the shot.
    pub postselect: Vec<usize>,
}

/// Prepared sampling problem: raw error channels, their detector and
/// observable columns, and the decoding model.
struct Sampler {
    /// Per channel: `(probability, column)` outcomes, exclusive.
    channels: Vec<Vec<(f64, usize)>>,
    h_cols: Vec<BitVec>,
    abort_cols: Vec<BitVec>,
    l_cols: Vec<BitVec>,
    dem: DetectorErrorModel,
}

impl Sampler {
    fn new(c: &Circuit, postselect: &[usize]) -> Result<Self, ExperimentError> {
        let analysis = analyze(c)?;
        let errs = enumerate_errors(c);
        let sm = build_syndrome_matrix(c, &errs);
        let priors: Vec<f64> = errs.iter().map(|e| e.prob).collect();
        let full = DetectorErrorModel::build(
            &analysis.detectors,
            &sm,
            &analysis.observable_matrix(),
            &priors,
        )?;

        let post: HashSet<usize> = postselect.iter().copied().collect();
        let dmat = analysis.detectors.measurement_matrix();
        let (mut kept, mut abort) = (Vec::new(), Vec::new());
        for i in 0..dmat.rows() {
            let support = dmat.row(i).ones();
            if !post.is_empty() && support.iter().all(|&j| post.contains(&(j + 1))) {
                abort.push(i);
            } else {
                kept.push(i);
            }
        }
        let h = full.h.select_rows(&kept);
        let ha = full.h.select_rows(&abort);
        let ht = h.transpose();
        let hat = ha.transpose();
        let lt = full.l.transpose();
        let e = full.num_errors();

        let live: Vec<usize> = (0..e).filter(|&j| priors[j] > 0.0).collect();
        let dem = DetectorErrorModel::from_matrices(
            h.select_columns(&live),
            full.l.select_columns(&live),
            live.iter().map(|&j| priors[j]).collect(),
        )?
        .merge_equivalent();

        let mut channels: Vec<Vec<(f64, usize)>> = Vec::new();
        let mut last = usize::MAX;
        for err in &errs {
            if err.channel != last {
                channels.push(Vec::new());
                last = err.channel;
            }
            if err.prob > 0.0 {
                channels.last_mut().unwrap().push((err.prob, err.id));
            }
        }
        channels.retain(|ch| !ch.is_empty());
        for ch in &channels {
            let total: f64 = ch.iter().map(|(p, _)| p).sum();
            if total > 1.0 + 1e-12 {
                return Err(ExperimentError::Invalid(format!(
                    "channel probabilities sum to {total}"
                )));
            }
        }
        Ok(Sampler {
            channels,
            h_cols: (0..e).map(|j| ht.row(j)).collect(),
            abort_cols: (0..e).map(|j| hat.row(j)).collect(),
            l_cols: (0..e).map(|j| lt.row(j)).collect(),
            dem,
        })
    }

    /// `None` for an aborted shot, else whether a logical error occurred.
    fn shot(&self, decoder: &Decoder<'_>, seed: u64, index: u64) -> Option<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut s = BitVec::zeros(self.dem.num_detectors());
        let mut a = BitVec::zeros(self.abort_cols.first().map_or(0, |c| c.len()));
        let mut o = BitVec::zeros(self.dem.num_observables());
        for ch in &self.channels {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for &(p, j) in ch {
                acc += p;
                if u < acc {
                    s.xor_assign(&self.h_cols[j]);
                    a.xor_assign(&self.abort_cols[j]);
                    o.xor_assign(&self.l_cols[j]);
                    break;
                }
            }
        }
        if !a.is_zero() {
            return None;
        }
        // The syndrome is `D m` for the flipped record; `H = D Ω` gives it
        // directly from the sampled columns.
        Some(match decoder.predict(&s) {
            Some(pred) => pred != o,
            None => true,
        })
    }
}

/// Logical error rate of `c` under its own priors.
pub fn sample_rate(
    c: &Circuit,
    shots: u64,
    seed: u64,
    decoder: DecoderKind,
) -> Result<ExperimentResult, ExperimentError> {
    sample_rate_with(c, shots, seed, decoder, &SampleOptions::default())
}

/// Shot `i` draws from a ChaCha8 stream `i` keyed by `seed`, so results do
/// not depend on how shots are spread over threads.
pub fn sample_rate_with(
    c: &Circuit,
    shots: u64,
    seed: u64,
    decoder: DecoderKind,
    opts: &SampleOptions,
) -> Result<ExperimentResult, ExperimentError> {
    let sampler = Sampler::new(c, &opts.postselect)?;
    let dec = Decoder::new(&sampler.dem, decoder)?;
    const CHUNK: u64 = 8192;
    let (mut decoded, mut errors, mut aborted) = (0u64, 0u64, 0u64);
    let mut start = 0u64;
    'outer: while start < shots {
        let end = (start + CHUNK).min(shots);
        let results: Vec<Option<bool>> = (start..end)
            .into_par_iter()
            .map(|i| sampler.shot(&dec, seed, i))
            .collect();
        for r in results {
            match r {
                None => aborted += 1,
                Some(fail) => {
                    decoded += 1;
                    errors += fail as u64;
                    if opts.max_errors.is_some_and(|m| errors >= m) {
                        break 'outer;
                    }
                }
            }
        }
        start = end;
    }
    let rate = if decoded == 0 { 0.0 } else { errors as f64 / decoded as f64 };
    Ok(ExperimentResult {
        shots: decoded,
        logical_errors: errors,
        rate,
        ci95: wilson_interval(errors, decoded),
        seed,
        aborted,
    })
}

/// Target logical error rate of the teraquop regime.
pub const TERAQUOP_RATE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Footprint {
    pub d: usize,
    pub qubits: usize,
}

/// Fits `ln(rate)` linearly in `d`, solves for [`TERAQUOP_RATE`], rounds up
/// to the next odd distance and converts to surface-code qubits.
pub fn teraquop_footprint(
    rates: &[(usize, f64)],
    extraction: Extraction,
) -> Result<Footprint, ExperimentError> {
    if rates.len() < 2 {
        return Err(ExperimentError::Invalid("need at least two points".into()));
    }
    let mut pts = rates.to_vec();
    pts.sort_by_key(|&(d, _)| d);
    if pts.iter().any(|&(_, r)| !(r > 0.0 && r <= 1.0)) {
        return Err(ExperimentError::Invalid("rates must lie in (0, 1]".into()));
    }
    if pts.windows(2).any(|w| w[1].0 == w[0].0 || w[1].1 >= w[0].1) {
        return Err(ExperimentError::NonDecreasing);
    }
    let footprint = |d: usize| Footprint {
        d,
        qubits: qubit_count(CodeFamily::Surface, d, extraction),
    };
    if pts[0].1 <= TERAQUOP_RATE {
        return Ok(footprint(pts[0].0));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|&(d, _)| d as f64).sum::<f64>() / n;
    let my = pts.iter().map(|&(_, r)| r.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|&(d, r)| (d as f64 - mx) * (r.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|&(d, _)| (d as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let d_star = (TERAQUOP_RATE.ln() - intercept) / slope;
    let mut d = (d_star - 1e-9).ceil().max(1.0) as usize;
    if d % 2 == 0 {
        d += 1;
    }
    Ok(footprint(d))
}
