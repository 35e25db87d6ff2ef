//! Small dense operators: rotations, matrix exponentials and products.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::pauli::single_qubit_matrix;

/// `exp(−iθσ/2)` for the single-qubit Pauli `σ` with index `axis` (1, 2, 3 for X, Y, Z).
pub fn rotation(axis: usize, theta: f64) -> DMatrix<Complex64> {
    let id = single_qubit_matrix(0);
    let sigma = single_qubit_matrix(axis);
    id * Complex64::new((theta / 2.0).cos(), 0.0) + sigma * Complex64::new(0.0, -(theta / 2.0).sin())
}

/// `exp(−i H t)` for a Hermitian `H`, by scaling and squaring a truncated Taylor series.
pub fn unitary_propagator(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let a = h * Complex64::new(0.0, -t);
    expm(&a)
}

/// Matrix exponential by scaling and squaring with an 18-term Taylor series.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = a.nrows();
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * d as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = a * Complex64::new(scale, 0.0);
    let mut result = DMatrix::<Complex64>::identity(d, d);
    let mut term = DMatrix::<Complex64>::identity(d, d);
    for k in 1..=18 {
        term = &term * &a * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Kronecker product of a list of operators, first factor most significant.
pub fn kron_all(ops: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, m| acc.kronecker(m))
}
