//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use srb_core::gates::{kron_all, rotation};
use srb_core::ptm::PauliTransferMatrix;

fn key(r: &PauliTransferMatrix) -> Vec<i8> {
    r.matrix().iter().map(|x| x.round() as i8).collect()
}

fn cnot() -> DMatrix<Complex64> {
    let mut u = DMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        u[(i, j)] = Complex64::new(1.0, 0.0);
    }
    u
}

/// All 11520 two-qubit Clifford channels, by breadth-first closure of
/// `{X/2, Y/2} ⊗ I`, `I ⊗ {X/2, Y/2}` and CNOT.
pub fn two_qubit_clifford_ptms() -> Vec<PauliTransferMatrix> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let half = std::f64::consts::FRAC_PI_2;
    let mut gens = Vec::new();
    for axis in [1, 2] {
        let g = rotation(axis, half);
        gens.push(kron_all(&[g.clone(), id.clone()]));
        gens.push(kron_all(&[id.clone(), g]));
    }
    gens.push(cnot());
    let gens: Vec<PauliTransferMatrix> = gens.iter().map(|u| PauliTransferMatrix::from_unitary(u).unwrap()).collect();
    let start = PauliTransferMatrix::identity(2);
    let mut seen = HashSet::from([key(&start)]);
    let mut out = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(r) = queue.pop_front() {
        for g in &gens {
            let next = g.compose(&r).unwrap();
            if seen.insert(key(&next)) {
                out.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    out
}

/// `(Σ_{j∈S} R_jj)/|S|` computed straight from the matrix, for cross-checks.
pub fn diag_mean(r: &PauliTransferMatrix, idx: &[usize]) -> f64 {
    idx.iter().map(|&i| r.get(i, i)).sum::<f64>() / idx.len() as f64
}
