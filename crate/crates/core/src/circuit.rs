//! SWAP-network compilation of quadratic Ising QAOA onto a line of qubits.
//!
//! Each QAOA layer runs `m` rounds of an odd-even transposition network.
//! Every block on neighbouring physical qubits `(a, a+1)` applies
//! `exp(-i γ c Z_a Z_{a+1})` for the logical pair currently sitting there and
//! then swaps the two qubits:
//!
//! ```text
//! a   ──●────────────⊕──●──
//!       │            │  │
//! a+1 ──⊕──RZ(2γc)───●──⊕──
//! ```
//!
//! The first CNOT moves the parity onto `a+1` so the RZ applies the ZZ phase,
//! and the remaining two CNOTs together with the first form a SWAP. Blocks in
//! the last round of a layer keep only `CX · RZ · CX` and the would-be swap is
//! recorded in the logical-to-physical map instead. Over `m` rounds every
//! logical pair becomes adjacent exactly once, which gives
//! `(3/2 · m(m-1) - ⌊m/2⌋) · P` CNOTs for `P` layers.

use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::IsingPolynomial;
use crate::qaoa::{self, QaoaParams, StateVector};
use crate::solver::polynomial_table;
use crate::{Error, Result};

/// Largest register accepted by [`verify_equivalence`].
pub const MAX_VERIFY_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    H { q: usize },
    Rz { q: usize, theta: f64 },
    Rx { q: usize, theta: f64 },
    Cx { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H { q } | Gate::Rz { q, .. } | Gate::Rx { q, .. } => (q, None),
            Gate::Cx { control, target } => (control, Some(target)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx { .. })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H { q } => write!(f, "h q[{q}];"),
            Gate::Rz { q, theta } => write!(f, "rz({theta}) q[{q}];"),
            Gate::Rx { q, theta } => write!(f, "rx({theta}) q[{q}];"),
            Gate::Cx { control, target } => write!(f, "cx q[{control}],q[{target}];"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCircuit {
    m: usize,
    gates: Vec<Gate>,
    /// `final_bit_permutation[logical] = physical` at measurement time.
    final_bit_permutation: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub cnot: usize,
    pub single_qubit: usize,
    pub depth: usize,
}

impl GateCircuit {
    /// Checks indices, nearest-neighbour CNOTs and the permutation.
    pub fn new(m: usize, gates: Vec<Gate>, final_bit_permutation: Vec<usize>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSize("circuit needs at least one qubit".into()));
        }
        for g in &gates {
            let (a, b) = g.qubits();
            for q in std::iter::once(a).chain(b) {
                if q >= m {
                    return Err(Error::IndexOutOfRange { index: q, m });
                }
            }
            if let Some(b) = b {
                if a.abs_diff(b) != 1 {
                    return Err(Error::InvalidCircuit(format!(
                        "two-qubit gate on non-adjacent qubits {a} and {b}"
                    )));
                }
            }
        }
        if final_bit_permutation.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                found: final_bit_permutation.len(),
            });
        }
        let mut seen = vec![false; m];
        for &p in &final_bit_permutation {
            if p >= m || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidCircuit(format!(
                    "final bit permutation {final_bit_permutation:?} is not a bijection"
                )));
            }
        }
        Ok(Self {
            m,
            gates,
            final_bit_permutation,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn final_bit_permutation(&self) -> &[usize] {
        &self.final_bit_permutation
    }

    pub fn counts(&self) -> GateCounts {
        let cnot = self.gates.iter().filter(|g| g.is_two_qubit()).count();
        GateCounts {
            cnot,
            single_qubit: self.gates.len() - cnot,
            depth: self.depth(),
        }
    }

    /// Layers in an as-soon-as-possible schedule.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.m];
        for g in &self.gates {
            match g.qubits() {
                (a, None) => level[a] += 1,
                (a, Some(b)) => {
                    let l = level[a].max(level[b]) + 1;
                    level[a] = l;
                    level[b] = l;
                }
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    pub fn set_gate(&mut self, index: usize, gate: Gate) -> Result<()> {
        let mut gates = self.gates.clone();
        let len = gates.len();
        *gates
            .get_mut(index)
            .ok_or_else(|| Error::InvalidCircuit(format!("gate {index} of {len}")))? = gate;
        *self = Self::new(self.m, gates, self.final_bit_permutation.clone())?;
        Ok(())
    }

    /// Runs the gates on `|0...0>`. Amplitude indices are physical.
    pub fn simulate(&self) -> Result<StateVector> {
        let mut state = StateVector::zero(self.m)?;
        for g in &self.gates {
            match *g {
                Gate::H { q } => state.apply_single(q, qaoa::hadamard()),
                Gate::Rz { q, theta } => state.apply_single(q, qaoa::rz(theta)),
                Gate::Rx { q, theta } => state.apply_single(q, qaoa::rx(theta)),
                Gate::Cx { control, target } => state.apply_cx(control, target),
            }
        }
        Ok(state)
    }

    /// [`Self::simulate`] reindexed so bit `l` of the index is logical qubit `l`.
    pub fn simulate_logical(&self) -> Result<StateVector> {
        let physical = self.simulate()?;
        let amps = physical.amplitudes();
        let mut logical = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (z, slot) in logical.iter_mut().enumerate() {
            let y = self
                .final_bit_permutation
                .iter()
                .enumerate()
                .fold(0usize, |y, (l, &p)| y | (((z >> l) & 1) << p));
            *slot = amps[y];
        }
        StateVector::from_amplitudes(logical)
    }
}

/// Compiles depth-`P` QAOA for a polynomial of degree at most 2.
pub fn compile_swap_network(h: &IsingPolynomial, params: &QaoaParams) -> Result<GateCircuit> {
    params.validate()?;
    if h.degree() > 2 {
        return Err(Error::NotQuadratic { degree: h.degree() });
    }
    let m = h.m();
    if m < 2 {
        return Err(Error::InvalidSize(format!("SWAP network needs m >= 2, got {m}")));
    }
    let mut linear = vec![0.0; m];
    let mut pair = vec![vec![0.0; m]; m];
    for t in h.terms() {
        match t.support[..] {
            [i] => linear[i] += t.coeff,
            [i, j] => {
                pair[i][j] += t.coeff;
                pair[j][i] += t.coeff;
            }
            _ => {}
        }
    }

    let mut gates: Vec<Gate> = (0..m).map(|q| Gate::H { q }).collect();
    // at_phys[p] = logical qubit on physical p; phys_of[l] the inverse
    let mut at_phys: Vec<usize> = (0..m).collect();
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        for (l, &hl) in linear.iter().enumerate() {
            if hl != 0.0 {
                let q = at_phys.iter().position(|&x| x == l).expect("bijection");
                gates.push(Gate::Rz { q, theta: 2.0 * gamma * hl });
            }
        }
        for round in 0..m {
            let last = round + 1 == m;
            let mut a = (m - 1 - round) % 2;
            while a + 1 < m {
                let b = a + 1;
                let theta = 2.0 * gamma * pair[at_phys[a]][at_phys[b]];
                gates.push(Gate::Cx { control: a, target: b });
                gates.push(Gate::Rz { q: b, theta });
                if last {
                    gates.push(Gate::Cx { control: a, target: b });
                } else {
                    gates.push(Gate::Cx { control: b, target: a });
                    gates.push(Gate::Cx { control: a, target: b });
                    at_phys.swap(a, b);
                }
                a += 2;
            }
        }
        gates.extend((0..m).map(|q| Gate::Rx { q, theta: 2.0 * beta }));
    }

    let mut phys_of = vec![0; m];
    for (p, &l) in at_phys.iter().enumerate() {
        phys_of[l] = p;
    }
    GateCircuit::new(m, gates, phys_of)
}

/// `(3/2 · m(m-1) - ⌊m/2⌋) · p`
pub fn expected_cnot_count(m: usize, p: usize) -> usize {
    (3 * m * m.saturating_sub(1) / 2 - m / 2) * p
}

/// Maximum amplitude difference, up to global phase, between the circuit and
/// the direct diagonal evolution of `h`.
pub fn verify_equivalence(circ: &GateCircuit, h: &IsingPolynomial, params: &QaoaParams) -> Result<f64> {
    if circ.m() > MAX_VERIFY_QUBITS {
        return Err(Error::TooManyQubits { m: circ.m(), max: MAX_VERIFY_QUBITS });
    }
    if circ.m() != h.m() {
        return Err(Error::DimensionMismatch { expected: h.m(), found: circ.m() });
    }
    let reference = qaoa::prepare(&polynomial_table(h)?, params)?;
    Ok(reference.max_diff_up_to_phase(&circ.simulate_logical()?))
}

/// Verifies many instances in parallel.
pub fn verify_many(cases: &[(GateCircuit, IsingPolynomial, QaoaParams)]) -> Result<Vec<f64>> {
    cases
        .par_iter()
        .map(|(c, h, p)| verify_equivalence(c, h, p))
        .collect()
}

const QASM_HEADER: [&str; 2] = ["OPENQASM 2.0;", "include \"qelib1.inc\";"];

/// OpenQASM 2.0 with logical qubit `l` measured into classical bit `l`.
pub fn export_qasm(circ: &GateCircuit) -> String {
    let mut out = String::new();
    for line in QASM_HEADER {
        out.push_str(line);
        out.push('\n');
    }
    let _ = writeln!(out, "qreg q[{}];", circ.m);
    let _ = writeln!(out, "creg c[{}];", circ.m);
    for g in &circ.gates {
        let _ = writeln!(out, "{g}");
    }
    for (l, p) in circ.final_bit_permutation.iter().enumerate() {
        let _ = writeln!(out, "measure q[{p}] -> c[{l}];");
    }
    out
}

/// Reads back the subset of OpenQASM 2.0 that [`export_qasm`] writes.
pub fn parse_qasm(text: &str) -> Result<GateCircuit> {
    let mut m = None;
    let mut gates = Vec::new();
    let mut measured: Vec<(usize, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: &str| Error::Qasm { line: line_no, msg: msg.to_string() };
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() || QASM_HEADER.contains(&line) {
            continue;
        }
        let body = line.strip_suffix(';').ok_or_else(|| err("missing ';'"))?.trim();
        let (head, rest) = body.split_once(' ').ok_or_else(|| err("malformed statement"))?;
        let rest = rest.trim();
        let qubit = |s: &str| -> Result<usize> {
            let s = s.trim();
            s.strip_prefix("q[")
                .or_else(|| s.strip_prefix("c["))
                .and_then(|s| s.strip_suffix(']'))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(&format!("bad register reference {s:?}")))
        };
        let angle = |head: &str| -> Result<f64> {
            head.split_once('(')
                .and_then(|(_, a)| a.strip_suffix(')'))
                .and_then(|a| a.trim().parse().ok())
                .ok_or_else(|| err(&format!("bad angle in {head:?}")))
        };
        match head {
            "qreg" => m = Some(qubit(rest)?),
            "creg" => {}
            "h" => gates.push(Gate::H { q: qubit(rest)? }),
            "cx" => {
                let (c, t) = rest.split_once(',').ok_or_else(|| err("cx needs two operands"))?;
                gates.push(Gate::Cx { control: qubit(c)?, target: qubit(t)? });
            }
            "measure" => {
                let (q, c) = rest.split_once("->").ok_or_else(|| err("measure needs '->'"))?;
                measured.push((qubit(c)?, qubit(q)?));
            }
            _ if head.starts_with("rz(") => gates.push(Gate::Rz { q: qubit(rest)?, theta: angle(head)? }),
            _ if head.starts_with("rx(") => gates.push(Gate::Rx { q: qubit(rest)?, theta: angle(head)? }),
            _ => return Err(err(&format!("unsupported statement {head:?}"))),
        }
    }
    let m = m.ok_or(Error::Qasm { line: 0, msg: "no qreg declaration".into() })?;
    let mut perm = vec![usize::MAX; m];
    for (l, p) in measured {
        if l >= m {
            return Err(Error::IndexOutOfRange { index: l, m });
        }
        perm[l] = p;
    }
    if perm.contains(&usize::MAX) {
        return Err(Error::Qasm { line: 0, msg: "not every classical bit is measured".into() });
    }
    GateCircuit::new(m, gates, perm)
}
