#![allow(dead_code)]

pub mod statevector;

use detkit::circuit::{parse, Circuit, Instruction, NoiseChannel, NoiseKind};
use detkit::gf2::BitMatrix;
use detkit::pauli::{Gate, PauliKind};
use detkit::schedule::{parse_layout, parse_schedule, CodeLayout, MeasurementSchedule};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

pub fn fixture_path(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn circuit(name: &str) -> Circuit {
    parse(&fixture_text(name)).unwrap()
}

pub fn schedule(name: &str) -> MeasurementSchedule {
    parse_schedule(&fixture_text(name)).unwrap()
}

pub fn layout(name: &str) -> CodeLayout {
    parse_layout(&fixture_text(name)).unwrap()
}

pub fn d1() -> BitMatrix {
    BitMatrix::from_strs(&["10000", "01000", "00110", "00011"])
}

pub fn d2() -> BitMatrix {
    BitMatrix::from_strs(&["10000", "01000", "10110", "01011"])
}

pub fn omega1() -> BitMatrix {
    BitMatrix::from_strs(&["11010000", "01101000", "10000100", "01000010", "00100001"])
}

/// `D₁ Ω₁`, with row 3 being rows m3 ⊕ m4 of `Ω₁`.
pub fn h1() -> BitMatrix {
    BitMatrix::from_strs(&["11010000", "01101000", "11000110", "01100011"])
}

pub fn h2() -> BitMatrix {
    BitMatrix::from_strs(&["11010000", "01101000", "00010110", "00001011"])
}

/// Detectors d1..d6 of the two-round repetition memory example, over m1..m7.
pub fn memory_example_detectors() -> BitMatrix {
    BitMatrix::from_strs(&[
        "1000000", "0100000", "1010000", "0101000", "0010110", "0001011",
    ])
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> BitMatrix {
    let mut m = BitMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if rng.random_bool(0.5) {
                m.set(r, c, true);
            }
        }
    }
    m
}

const GATES: [Gate; 7] = [
    Gate::H,
    Gate::S,
    Gate::X,
    Gate::Y,
    Gate::Z,
    Gate::Cnot,
    Gate::Cz,
];

fn distinct(rng: &mut impl RngCore, n: usize, k: usize) -> Vec<usize> {
    let mut qs: Vec<usize> = (0..n).collect();
    qs.shuffle(rng);
    qs.truncate(k);
    qs
}

fn random_product(rng: &mut impl Rng, n: usize) -> Vec<(usize, PauliKind)> {
    let k = rng.random_range(1..=n);
    let mut qs = distinct(rng, n, k);
    qs.sort_unstable();
    qs.into_iter()
        .map(|q| {
            let kind = [PauliKind::X, PauliKind::Y, PauliKind::Z][rng.random_range(0..3)];
            (q, kind)
        })
        .collect()
}

/// A random valid instruction. Noise sites are included when `noisy`.
pub fn random_instruction(rng: &mut impl Rng, n: usize, noisy: bool) -> Instruction {
    let choices = if noisy { 7 } else { 5 };
    let flip = |rng: &mut dyn RngCore| {
        if noisy && rng.next_u32() % 2 == 0 {
            Some((rng.next_u32() % 1000) as f64 / 1000.0)
        } else {
            None
        }
    };
    loop {
        match rng.random_range(0..choices) {
            0 | 1 => {
                let gate = GATES[rng.random_range(0..GATES.len())];
                if gate.arity() > n {
                    continue;
                }
                let targets = distinct(rng, n, gate.arity());
                return Instruction::Gate { gate, targets };
            }
            2 => {
                let targets = distinct(rng, n, 1);
                return Instruction::Reset { targets };
            }
            3 => {
                let k = rng.random_range(1..=n);
                let targets = distinct(rng, n, k);
                let f = flip(rng);
                return if rng.random_bool(0.5) {
                    Instruction::MeasureZ { targets, flip: f }
                } else {
                    Instruction::MeasureX { targets, flip: f }
                };
            }
            4 => {
                let count = rng.random_range(1..=2);
                let products = (0..count).map(|_| random_product(rng, n)).collect();
                return Instruction::MeasurePauli {
                    products,
                    flip: flip(rng),
                };
            }
            5 => {
                let kinds = [NoiseKind::XError, NoiseKind::YError, NoiseKind::ZError, NoiseKind::Depolarize1];
                let kind = kinds[rng.random_range(0..kinds.len())];
                let k = rng.random_range(1..=n);
                let targets = distinct(rng, n, k);
                let p = rng.random_range(0..1000) as f64 / 1000.0;
                return Instruction::Noise {
                    channel: NoiseChannel { kind, p },
                    targets,
                };
            }
            _ => {
                if n < 2 {
                    continue;
                }
                let targets = distinct(rng, n, 2);
                let p = rng.random_range(0..1000) as f64 / 1000.0;
                return Instruction::Noise {
                    channel: NoiseChannel {
                        kind: NoiseKind::Depolarize2,
                        p,
                    },
                    targets,
                };
            }
        }
    }
}

pub fn random_circuit(rng: &mut impl Rng, n: usize, len: usize, noisy: bool) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..len {
        let inst = random_instruction(rng, n, noisy);
        c.push(inst).unwrap();
    }
    c
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in combinations(n - first - 1, k - 1) {
            let mut v = vec![first];
            v.extend(rest.iter().map(|r| r + first + 1));
            out.push(v);
        }
    }
    out
}
