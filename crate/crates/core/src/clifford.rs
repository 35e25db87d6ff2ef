//! Single-qubit Clifford group and the two-qubit product groups used by the
//! three benchmarking experiments.
//!
//! The single-qubit group is the closure of the six physical generators
//! `{X±π/2, Y±π/2, Xπ, Yπ}` under composition as channels. Every element
//! keeps the shortest generator word found during the breadth-first closure,
//! so the simulator can play a Clifford as a sequence of physical pulses.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gates;
use crate::ptm::PauliTransferMatrix;

/// Entries farther than this from an integer are not Clifford entries.
const KEY_GUARD: f64 = 1e-6;
const CLOSURE_BOUND: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    XPlus90,
    XMinus90,
    YPlus90,
    YMinus90,
    X180,
    Y180,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::XPlus90,
        Generator::XMinus90,
        Generator::YPlus90,
        Generator::YMinus90,
        Generator::X180,
        Generator::Y180,
    ];

    /// Rotation axis as a single-qubit Pauli index (1 = X, 2 = Y).
    pub fn axis(self) -> usize {
        match self {
            Generator::XPlus90 | Generator::XMinus90 | Generator::X180 => 1,
            Generator::YPlus90 | Generator::YMinus90 | Generator::Y180 => 2,
        }
    }

    pub fn angle(self) -> f64 {
        match self {
            Generator::XPlus90 | Generator::YPlus90 => FRAC_PI_2,
            Generator::XMinus90 | Generator::YMinus90 => -FRAC_PI_2,
            Generator::X180 | Generator::Y180 => PI,
        }
    }

    pub fn unitary(self) -> DMatrix<num_complex::Complex64> {
        gates::rotation(self.axis(), self.angle())
    }

    pub fn ptm(self) -> PauliTransferMatrix {
        PauliTransferMatrix::from_unitary(&self.unitary()).expect("rotations are unitary")
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::XPlus90 => "X90",
            Generator::XMinus90 => "-X90",
            Generator::YPlus90 => "Y90",
            Generator::YMinus90 => "-Y90",
            Generator::X180 => "X180",
            Generator::Y180 => "Y180",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown generator {s:?}")))
    }
}

/// One time slot of a two-qubit pulse schedule; `None` is an idle.
pub type Slot = [Option<Generator>; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    /// Single-qubit Clifford group.
    C1,
    /// Independent Cliffords on both qubits.
    CxC,
    /// Cliffords on qubit 1, identity on qubit 2.
    CxI,
    /// Identity on qubit 1, Cliffords on qubit 2.
    IxC,
}

impl GroupKind {
    pub fn num_qubits(self) -> usize {
        match self {
            GroupKind::C1 => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::C1 => "C",
            GroupKind::CxC => "CxC",
            GroupKind::CxI => "CxI",
            GroupKind::IxC => "IxC",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CliffordElement {
    pub index: usize,
    pub ptm: PauliTransferMatrix,
    /// Generator words per qubit, in time order (first pulse first).
    pub words: Vec<Vec<Generator>>,
}

impl CliffordElement {
    /// Pulse schedule: the per-qubit words played in parallel, the shorter
    /// one padded with idles at the end.
    pub fn slots(&self) -> Vec<Slot> {
        let len = self.words.iter().map(Vec::len).max().unwrap_or(0);
        (0..len)
            .map(|k| {
                let mut slot = [None, None];
                for (q, w) in self.words.iter().enumerate().take(2) {
                    slot[q] = w.get(k).copied();
                }
                slot
            })
            .collect()
    }

    pub fn pulse_count(&self) -> usize {
        self.words.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Every two-qubit Clifford channel (11520 of them), closed from the
/// single-qubit generators on each qubit and a CNOT. Only the channels are
/// kept; this is the reference set for full two-qubit twirls.
pub fn two_qubit_clifford_ptms() -> Result<Vec<PauliTransferMatrix>> {
    let one = num_complex::Complex64::new(1.0, 0.0);
    let mut cnot = DMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot[(i, j)] = one;
    }
    let id = DMatrix::identity(2, 2);
    let mut gens = vec![PauliTransferMatrix::from_unitary(&cnot)?];
    for g in [Generator::XPlus90, Generator::YPlus90] {
        gens.push(PauliTransferMatrix::from_unitary(&gates::kron_all(&[g.unitary(), id.clone()]))?);
        gens.push(PauliTransferMatrix::from_unitary(&gates::kron_all(&[id.clone(), g.unitary()]))?);
    }
    let identity = PauliTransferMatrix::identity(2);
    let mut seen = std::collections::HashSet::from([canonical_key(&identity).expect("identity key")]);
    let mut out = vec![identity];
    let mut next_unvisited = 0;
    while next_unvisited < out.len() {
        let r = out[next_unvisited].clone();
        next_unvisited += 1;
        for g in &gens {
            let next = g.compose(&r)?;
            if seen.insert(canonical_key(&next).ok_or(Error::NotInGroup)?) {
                out.push(next);
            }
        }
        if out.len() > 12 * CLOSURE_BOUND {
            return Err(Error::ClosureNotReached(out.len()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CliffordGroup {
    kind: GroupKind,
    elements: Vec<CliffordElement>,
    mult: Vec<u16>,
    inv: Vec<u16>,
    keys: HashMap<Vec<i8>, usize>,
}

fn canonical_key(r: &PauliTransferMatrix) -> Option<Vec<i8>> {
    r.matrix()
        .iter()
        .map(|&x| {
            let k = x.round();
            ((x - k).abs() < KEY_GUARD && k.abs() <= 1.0).then_some(k as i8)
        })
        .collect()
}

impl CliffordGroup {
    /// Breadth-first closure of the six generators.
    pub fn generate_c1() -> Result<Self> {
        let gens: Vec<(Generator, PauliTransferMatrix)> = Generator::ALL.iter().map(|&g| (g, g.ptm())).collect();
        let identity = PauliTransferMatrix::identity(1);
        let mut elements = vec![CliffordElement { index: 0, ptm: identity.clone(), words: vec![vec![]] }];
        let mut keys = HashMap::from([(canonical_key(&identity).expect("identity key"), 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for (g, gp) in &gens {
                let next = gp.compose(&elements[i].ptm)?;
                let key = canonical_key(&next).ok_or(Error::NotInGroup)?;
                if keys.contains_key(&key) {
                    continue;
                }
                if elements.len() >= CLOSURE_BOUND {
                    return Err(Error::ClosureNotReached(elements.len()));
                }
                let mut word = elements[i].words[0].clone();
                word.push(*g);
                let index = elements.len();
                keys.insert(key, index);
                elements.push(CliffordElement { index, ptm: next, words: vec![word] });
                queue.push_back(index);
            }
        }
        let size = elements.len();
        let mut mult = vec![0u16; size * size];
        for a in 0..size {
            for b in 0..size {
                let prod = elements[a].ptm.compose(&elements[b].ptm)?;
                let key = canonical_key(&prod).ok_or(Error::NotInGroup)?;
                mult[a * size + b] = *keys.get(&key).ok_or(Error::ClosureNotReached(size))? as u16;
            }
        }
        let inv = (0..size)
            .map(|a| (0..size).find(|&b| mult[a * size + b] == 0).map(|b| b as u16).ok_or(Error::NotInGroup))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind: GroupKind::C1, elements, mult, inv, keys })
    }

    /// Two-qubit product groups built from the single-qubit tables.
    pub fn product_group(kind: GroupKind) -> Result<Self> {
        let c1 = Self::generate_c1()?;
        Self::product_from(&c1, kind)
    }

    pub fn product_from(c1: &CliffordGroup, kind: GroupKind) -> Result<Self> {
        if c1.kind != GroupKind::C1 {
            return Err(Error::InvalidArgument("product groups are built from the single-qubit group".into()));
        }
        let n1 = c1.len();
        let id1 = PauliTransferMatrix::identity(1);
        let pairs: Vec<(usize, usize)> = match kind {
            GroupKind::C1 => return Ok(c1.clone()),
            GroupKind::CxC => (0..n1).flat_map(|a| (0..n1).map(move |b| (a, b))).collect(),
            GroupKind::CxI => (0..n1).map(|a| (a, usize::MAX)).collect(),
            GroupKind::IxC => (0..n1).map(|b| (usize::MAX, b)).collect(),
        };
        let part = |i: usize| -> (&PauliTransferMatrix, Vec<Generator>) {
            if i == usize::MAX {
                (&id1, vec![])
            } else {
                (&c1.elements[i].ptm, c1.elements[i].words[0].clone())
            }
        };
        let mut elements = Vec::with_capacity(pairs.len());
        let mut keys = HashMap::with_capacity(pairs.len());
        for (index, &(a, b)) in pairs.iter().enumerate() {
            let (pa, wa) = part(a);
            let (pb, wb) = part(b);
            let ptm = pa.tensor(pb)?;
            keys.insert(canonical_key(&ptm).ok_or(Error::NotInGroup)?, index);
            elements.push(CliffordElement { index, ptm, words: vec![wa, wb] });
        }
        let size = pairs.len();
        let position = |a: usize, b: usize| -> u16 {
            match kind {
                GroupKind::CxC => (a * n1 + b) as u16,
                GroupKind::CxI => a as u16,
                _ => b as u16,
            }
        };
        let mul1 = |a: usize, b: usize| if a == usize::MAX { usize::MAX } else { c1.multiply(a, b) };
        let inv1 = |a: usize| if a == usize::MAX { usize::MAX } else { c1.inverse(a) };
        let mut mult = vec![0u16; size * size];
        for (x, &(a1, a2)) in pairs.iter().enumerate() {
            for (y, &(b1, b2)) in pairs.iter().enumerate() {
                mult[x * size + y] = position(mul1(a1, b1), mul1(a2, b2));
            }
        }
        let inv = pairs.iter().map(|&(a1, a2)| position(inv1(a1), inv1(a2))).collect();
        Ok(Self { kind, elements, mult, inv, keys })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.kind.num_qubits()
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CliffordElement {
        &self.elements[i]
    }

    pub fn ptms(&self) -> impl Iterator<Item = &PauliTransferMatrix> {
        self.elements.iter().map(|e| &e.ptm)
    }

    /// Index of `ptm(a) · ptm(b)` (apply `b` first).
    pub fn multiply(&self, a: usize, b: usize) -> usize {
        self.mult[a * self.len() + b] as usize
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    /// Finds the element whose PTM rounds to `ptm`.
    pub fn lookup(&self, ptm: &PauliTransferMatrix) -> Result<usize> {
        if ptm.num_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch { expected: self.num_qubits(), got: ptm.num_qubits() });
        }
        let key = canonical_key(ptm).ok_or(Error::NotInGroup)?;
        self.keys.get(&key).copied().ok_or(Error::NotInGroup)
    }

    /// Index of the gate that undoes `sequence` (applied left to right).
    pub fn recovery_gate(&self, sequence: &[usize]) -> usize {
        let total = sequence.iter().fold(0, |acc, &i| self.multiply(i, acc));
        self.inverse(total)
    }

    /// `m` i.i.d. uniform element indices.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Result<Vec<usize>> {
        if m == 0 {
            return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
        }
        Ok((0..m).map(|_| rng.random_range(0..self.len())).collect())
    }

    /// Mean number of pulse slots per element.
    pub fn average_pulse_count(&self) -> f64 {
        self.elements.iter().map(|e| e.pulse_count() as f64).sum::<f64>() / self.len() as f64
    }

    /// CSV dump: index, per-qubit words and the flattened PTM (row major).
    pub fn to_csv(&self) -> String {
        let size = self.elements[0].ptm.size();
        let mut out = String::from("index");
        for q in 0..self.elements[0].words.len() {
            out.push_str(&format!(",word_q{}", q + 1));
        }
        for i in 0..size {
            for j in 0..size {
                out.push_str(&format!(",r{i}_{j}"));
            }
        }
        out.push('\n');
        for e in &self.elements {
            out.push_str(&e.index.to_string());
            for w in &e.words {
                let names: Vec<&str> = w.iter().map(|g| g.name()).collect();
                out.push(',');
                out.push_str(if names.is_empty() { "I" } else { "" });
                out.push_str(&names.join(" "));
            }
            for i in 0..size {
                for j in 0..size {
                    out.push_str(&format!(",{}", e.ptm.get(i, j).round() as i8));
                }
            }
            out.push('\n');
        }
        out
    }
}
