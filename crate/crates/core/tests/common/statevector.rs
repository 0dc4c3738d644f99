//! Dense statevector simulator for small noise-free Clifford circuits.

use detkit::circuit::{Circuit, Instruction};
use detkit::pauli::{Gate, PauliKind};
use num_complex::Complex64;
use rand::Rng;

const EPS: f64 = 1e-9;

pub struct State {
    n: usize,
    amp: Vec<Complex64>,
}

/// Per measurement: outcome bit and whether the outcome was forced.
#[derive(Clone, Debug, Default)]
pub struct Record {
    pub outcomes: Vec<bool>,
    pub deterministic: Vec<bool>,
}

impl State {
    pub fn new(n: usize) -> Self {
        let mut amp = vec![Complex64::new(0.0, 0.0); 1 << n];
        amp[0] = Complex64::new(1.0, 0.0);
        State { n, amp }
    }

    fn bit(i: usize, q: usize) -> bool {
        (i >> q) & 1 == 1
    }

    pub fn gate(&mut self, g: Gate, t: &[usize]) {
        let i_unit = Complex64::new(0.0, 1.0);
        match g {
            Gate::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let q = t[0];
                for i in 0..self.amp.len() {
                    if !Self::bit(i, q) {
                        let j = i | (1 << q);
                        let (a, b) = (self.amp[i], self.amp[j]);
                        self.amp[i] = (a + b) * s;
                        self.amp[j] = (a - b) * s;
                    }
                }
            }
            Gate::S => {
                for i in 0..self.amp.len() {
                    if Self::bit(i, t[0]) {
                        self.amp[i] *= i_unit;
                    }
                }
            }
            Gate::X => self.pauli(&[(t[0], PauliKind::X)]),
            Gate::Y => self.pauli(&[(t[0], PauliKind::Y)]),
            Gate::Z => self.pauli(&[(t[0], PauliKind::Z)]),
            Gate::Cnot => {
                let (c, tg) = (t[0], t[1]);
                for i in 0..self.amp.len() {
                    if Self::bit(i, c) && !Self::bit(i, tg) {
                        self.amp.swap(i, i | (1 << tg));
                    }
                }
            }
            Gate::Cz => {
                for i in 0..self.amp.len() {
                    if Self::bit(i, t[0]) && Self::bit(i, t[1]) {
                        self.amp[i] = -self.amp[i];
                    }
                }
            }
        }
    }

    fn apply_to(&self, p: &[(usize, PauliKind)]) -> Vec<Complex64> {
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        let mut ys = 0u32;
        for &(q, k) in p {
            match k {
                PauliKind::I => {}
                PauliKind::X => xmask |= 1 << q,
                PauliKind::Z => zmask |= 1 << q,
                PauliKind::Y => {
                    xmask |= 1 << q;
                    zmask |= 1 << q;
                    ys += 1;
                }
            }
        }
        let phase = Complex64::new(0.0, 1.0).powu(ys);
        let mut out = vec![Complex64::new(0.0, 0.0); self.amp.len()];
        for (i, a) in self.amp.iter().enumerate() {
            let sign = if (zmask & i).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ xmask] += a * phase * sign;
        }
        out
    }

    pub fn pauli(&mut self, p: &[(usize, PauliKind)]) {
        self.amp = self.apply_to(p);
    }

    /// Projective measurement of `p`; returns (outcome bit, forced).
    pub fn measure(&mut self, p: &[(usize, PauliKind)], rng: &mut impl Rng) -> (bool, bool) {
        let pa = self.apply_to(p);
        let expect: f64 = self
            .amp
            .iter()
            .zip(&pa)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let p_plus = ((1.0 + expect) / 2.0).clamp(0.0, 1.0);
        let forced = p_plus < EPS || p_plus > 1.0 - EPS;
        let outcome = if forced {
            p_plus < 0.5
        } else {
            rng.random_bool(0.5)
        };
        let s = if outcome { -1.0 } else { 1.0 };
        let mut norm = 0.0;
        for (a, b) in self.amp.iter_mut().zip(&pa) {
            *a = (*a + b * s) * 0.5;
            norm += a.norm_sqr();
        }
        let k = norm.sqrt();
        for a in &mut self.amp {
            *a /= k;
        }
        (outcome, forced)
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// An injected fault: a Pauli applied after instruction `position`, or a
/// flipped measurement result (1-based).
#[derive(Clone, Debug)]
pub enum Fault {
    Pauli {
        position: usize,
        terms: Vec<(usize, PauliKind)>,
    },
    Flip(usize),
}

/// Runs the noise-free part of `c`, injecting `faults`. A reset swaps the
/// qubit with a fresh ancilla, so its discarded value stays unobserved and a
/// measurement counts as forced only when recorded outcomes fix it.
pub fn run(c: &Circuit, faults: &[Fault], rng: &mut impl Rng) -> Record {
    let resets: usize = c
        .instructions
        .iter()
        .map(|i| match i {
            Instruction::Reset { targets } => targets.len(),
            _ => 0,
        })
        .sum();
    let mut st = State::new(c.n_qubits + resets);
    let mut fresh = c.n_qubits;
    let mut rec = Record::default();
    for (pos, inst) in c.instructions.iter().enumerate() {
        match inst {
            Instruction::Gate { gate, targets } => {
                for t in targets.chunks(gate.arity()) {
                    st.gate(*gate, t);
                }
            }
            Instruction::Reset { targets } => {
                for &q in targets {
                    st.gate(Gate::Cnot, &[q, fresh]);
                    st.gate(Gate::Cnot, &[fresh, q]);
                    st.gate(Gate::Cnot, &[q, fresh]);
                    fresh += 1;
                }
            }
            Instruction::MeasureZ { targets, .. } | Instruction::MeasureX { targets, .. } => {
                let kind = if matches!(inst, Instruction::MeasureZ { .. }) {
                    PauliKind::Z
                } else {
                    PauliKind::X
                };
                for &q in targets {
                    let (b, f) = st.measure(&[(q, kind)], rng);
                    rec.outcomes.push(b);
                    rec.deterministic.push(f);
                }
            }
            Instruction::MeasurePauli { products, .. } => {
                for prod in products {
                    let (b, f) = st.measure(prod, rng);
                    rec.outcomes.push(b);
                    rec.deterministic.push(f);
                }
            }
            Instruction::Noise { .. } | Instruction::Tick => {}
        }
        for f in faults {
            if let Fault::Pauli { position, terms } = f {
                if *position == pos {
                    st.pauli(terms);
                }
            }
        }
    }
    for f in faults {
        if let Fault::Flip(k) = f {
            rec.outcomes[k - 1] ^= true;
        }
    }
    rec
}
