//! Pauli transfer matrices and Pauli-basis vectors.
//!
//! Entry `(i, j)` of a PTM is `Tr[P_i Λ(P_j)] / d`. States are expanded as
//! `ρ = Σ x_j P_j / d` and measurement operators as `E = Σ e_j P_j`, so
//! `Tr[E Λ(ρ)] = eᵀ R x`. Complex arithmetic is confined to the two
//! constructors that start from operators; everything downstream is real.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{pauli_basis, PauliLabel, MAX_QUBITS};

/// Default tolerance for equality and validity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTransferMatrix {
    n: usize,
    m: DMatrix<f64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("unsupported qubit count {n}")));
    }
    Ok(())
}

fn qubits_for_hilbert_dim(d: usize) -> Result<usize> {
    match d {
        2 => Ok(1),
        4 => Ok(2),
        _ => Err(Error::InvalidArgument(format!("unsupported Hilbert dimension {d}"))),
    }
}

impl PauliTransferMatrix {
    pub fn identity(n: usize) -> Self {
        let size = 1 << (2 * n);
        Self { n, m: DMatrix::identity(size, size) }
    }

    pub fn from_matrix(n: usize, m: DMatrix<f64>) -> Result<Self> {
        check_qubits(n)?;
        let size = 1 << (2 * n);
        if m.nrows() != size || m.ncols() != size {
            return Err(Error::DimensionMismatch { expected: size, got: m.nrows().max(m.ncols()) });
        }
        Ok(Self { n, m })
    }

    pub fn from_diagonal(n: usize, diag: &[f64]) -> Result<Self> {
        let size = 1 << (2 * n);
        if diag.len() != size {
            return Err(Error::DimensionMismatch { expected: size, got: diag.len() });
        }
        Self::from_matrix(n, DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Depolarizing channel `diag(1, α, …, α)`.
    pub fn depolarizing(n: usize, alpha: f64) -> Self {
        let size = 1 << (2 * n);
        let mut m = DMatrix::identity(size, size) * alpha;
        m[(0, 0)] = 1.0;
        Self { n, m }
    }

    /// PTM of `ρ ↦ U ρ U†`. Rejects operators that are not unitary within `1e-10`.
    pub fn from_unitary(u: &DMatrix<Complex64>) -> Result<Self> {
        Self::from_unitary_with_tolerance(u, DEFAULT_TOLERANCE)
    }

    pub fn from_unitary_with_tolerance(u: &DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch { expected: u.nrows(), got: u.ncols() });
        }
        let n = qubits_for_hilbert_dim(u.nrows())?;
        let deviation = (u.adjoint() * u - DMatrix::<Complex64>::identity(u.nrows(), u.nrows())).norm();
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self::from_operator_sum(n, std::slice::from_ref(u)))
    }

    /// PTM of `ρ ↦ Σ K ρ K†`. With `require_trace_preserving` the set must
    /// satisfy `Σ K†K = 1` within `1e-10`; otherwise any operator set is
    /// accepted (useful for measurement operators with absorbed errors).
    pub fn from_kraus(kraus: &[DMatrix<Complex64>], require_trace_preserving: bool) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let d = first.nrows();
        let n = qubits_for_hilbert_dim(d)?;
        for k in kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: k.nrows().max(k.ncols()) });
            }
        }
        if require_trace_preserving {
            let sum = kraus.iter().fold(DMatrix::<Complex64>::zeros(d, d), |acc, k| acc + k.adjoint() * k);
            let deviation = (sum - DMatrix::<Complex64>::identity(d, d)).norm();
            if deviation > DEFAULT_TOLERANCE {
                return Err(Error::NotTracePreserving { deviation });
            }
        }
        Ok(Self::from_operator_sum(n, kraus))
    }

    fn from_operator_sum(n: usize, ops: &[DMatrix<Complex64>]) -> Self {
        let paulis = pauli_basis(n);
        let d = 1usize << n;
        let size = paulis.len();
        let mut m = DMatrix::zeros(size, size);
        for (j, pj) in paulis.iter().enumerate() {
            let image = ops.iter().fold(DMatrix::<Complex64>::zeros(d, d), |acc, k| acc + k * pj * k.adjoint());
            for (i, pi) in paulis.iter().enumerate() {
                m[(i, j)] = (pi * &image).trace().re / d as f64;
            }
        }
        Self { n, m }
    }

    /// Diagonal PTM of conjugation by the Pauli `k`:
    /// `(−1)^(v_i·w_k + w_i·v_k)` on the diagonal.
    pub fn pauli_conjugation(k: &PauliLabel) -> Self {
        let n = k.num_qubits();
        let diag: Vec<f64> = PauliLabel::all(n).map(|p| if p.anticommutes(k) { -1.0 } else { 1.0 }).collect();
        Self { n, m: DMatrix::from_diagonal(&DVector::from_vec(diag)) }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Number of rows/columns, `4^n`.
    pub fn size(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn transpose(&self) -> Self {
        Self { n: self.n, m: self.m.transpose() }
    }

    /// `self · inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &PauliTransferMatrix) -> Result<Self> {
        if self.n != inner.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: inner.n });
        }
        Ok(Self { n: self.n, m: &self.m * &inner.m })
    }

    /// `self ⊗ other`, with `self` acting on the leading (more significant) qubits.
    pub fn tensor(&self, other: &PauliTransferMatrix) -> Result<Self> {
        let n = self.n + other.n;
        check_qubits(n)?;
        Ok(Self { n, m: self.m.kronecker(&other.m) })
    }

    pub fn apply(&self, x: &PauliVector) -> Result<PauliVector> {
        if x.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.n });
        }
        Ok(PauliVector { n: self.n, coeffs: &self.m * &x.coeffs })
    }

    pub fn max_abs_diff(&self, other: &PauliTransferMatrix) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        (&self.m - &other.m).amax()
    }

    pub fn approx_eq(&self, other: &PauliTransferMatrix, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let size = self.size();
        (self.m.transpose() * &self.m - DMatrix::<f64>::identity(size, size)).amax() <= tol
    }

    /// First row equal to `(1, 0, …, 0)` within `tol`.
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        (0..self.size()).all(|j| (self.m[(0, j)] - if j == 0 { 1.0 } else { 0.0 }).abs() <= tol)
    }

    /// Eigenvalues of the Choi matrix `J = Σ_ij R_ij P_jᵀ ⊗ P_i / d`,
    /// normalized so a trace-preserving channel has `Tr J = d`.
    pub fn choi_eigenvalues(&self) -> Vec<f64> {
        let paulis = pauli_basis(self.n);
        let d = 1usize << self.n;
        let mut choi = DMatrix::<Complex64>::zeros(d * d, d * d);
        for (i, pi) in paulis.iter().enumerate() {
            for (j, pj) in paulis.iter().enumerate() {
                let r = self.m[(i, j)];
                if r != 0.0 {
                    choi += pj.transpose().kronecker(pi) * Complex64::new(r / d as f64, 0.0);
                }
            }
        }
        let mut ev: Vec<f64> = choi.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Complete positivity diagnostic: smallest Choi eigenvalue `≥ −tol`.
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        self.choi_eigenvalues().first().is_none_or(|&e| e >= -tol)
    }
}

impl fmt::Display for PauliTransferMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.size() {
            let row: Vec<String> = (0..self.size()).map(|j| format!("{:+.6}", self.m[(i, j)])).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// PTM of a unitary channel.
pub fn ptm_from_unitary(u: &DMatrix<Complex64>) -> Result<PauliTransferMatrix> {
    PauliTransferMatrix::from_unitary(u)
}

/// PTM of a trace-preserving Kraus set.
pub fn ptm_from_kraus(kraus: &[DMatrix<Complex64>]) -> Result<PauliTransferMatrix> {
    PauliTransferMatrix::from_kraus(kraus, true)
}

/// `outer · inner` (apply `inner` first).
pub fn compose(outer: &PauliTransferMatrix, inner: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
    outer.compose(inner)
}

pub fn tensor(a: &PauliTransferMatrix, b: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
    a.tensor(b)
}

pub fn pauli_conjugation_ptm(k: &PauliLabel) -> PauliTransferMatrix {
    PauliTransferMatrix::pauli_conjugation(k)
}

/// Pauli-basis coefficients of a state (`ρ = Σ x_j P_j / d`) or of a
/// measurement operator (`E = Σ e_j P_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct PauliVector {
    n: usize,
    coeffs: DVector<f64>,
}

impl PauliVector {
    pub fn from_coefficients(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_qubits(n)?;
        let size = 1 << (2 * n);
        if coeffs.len() != size {
            return Err(Error::DimensionMismatch { expected: size, got: coeffs.len() });
        }
        Ok(Self { n, coeffs: DVector::from_vec(coeffs) })
    }

    /// `x_j = Tr(P_j ρ)`.
    pub fn from_density_matrix(rho: &DMatrix<Complex64>) -> Result<Self> {
        let n = qubits_for_hilbert_dim(rho.nrows())?;
        let coeffs = pauli_basis(n).iter().map(|p| (p * rho).trace().re).collect();
        Self::from_coefficients(n, coeffs)
    }

    /// `e_j = Tr(P_j E) / d`.
    pub fn from_measurement_operator(e: &DMatrix<Complex64>) -> Result<Self> {
        let n = qubits_for_hilbert_dim(e.nrows())?;
        let d = (1usize << n) as f64;
        let coeffs = pauli_basis(n).iter().map(|p| (p * e).trace().re / d).collect();
        Self::from_coefficients(n, coeffs)
    }

    fn z_product(n: usize, bits: &[u8], scale: f64) -> Result<Self> {
        if bits.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: bits.len() });
        }
        // |b⟩⟨b| = Π_q (I + (−1)^b_q Z_q)/2: only I/Z strings contribute.
        let coeffs = PauliLabel::all(n)
            .map(|p| {
                let mut c = scale;
                for (q, &b) in bits.iter().enumerate() {
                    match p.qubit(q) {
                        0 => {}
                        3 => c *= if b == 0 { 1.0 } else { -1.0 },
                        _ => return 0.0,
                    }
                }
                c
            })
            .collect();
        Self::from_coefficients(n, coeffs)
    }

    /// Computational basis state `|b_1 … b_n⟩` as a state vector.
    pub fn basis_state(bits: &[u8]) -> Result<Self> {
        Self::z_product(bits.len(), bits, 1.0)
    }

    /// Projector `|b⟩⟨b|` as a measurement vector.
    pub fn basis_projector(bits: &[u8]) -> Result<Self> {
        let d = (1usize << bits.len()) as f64;
        Self::z_product(bits.len(), bits, 1.0 / d)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn get(&self, j: usize) -> f64 {
        self.coeffs[j]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, coeffs: &self.coeffs * s }
    }

    pub fn add(&self, other: &PauliVector) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(Self { n: self.n, coeffs: &self.coeffs + &other.coeffs })
    }

    pub fn dot(&self, other: &PauliVector) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        Ok(self.coeffs.dot(&other.coeffs))
    }
}

/// `eᵀ R x`: the probability of measurement outcome `e` after channel `R` on state `x`.
pub fn expectation(e: &PauliVector, r: &PauliTransferMatrix, x: &PauliVector) -> Result<f64> {
    if e.n != r.n || x.n != r.n {
        return Err(Error::DimensionMismatch { expected: r.n, got: if e.n != r.n { e.n } else { x.n } });
    }
    Ok(e.coeffs.dot(&(&r.m * &x.coeffs)))
}

/// The irreducible subspaces used by the twirls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subspace {
    /// Π₀, the identity operator.
    Identity,
    /// Π, every non-identity Pauli.
    NonIdentity,
    /// Π₁ = 𝐏 ⊗ I.
    Qubit1,
    /// Π₂ = I ⊗ 𝐏.
    Qubit2,
    /// Π₁₂ = 𝐏 ⊗ 𝐏.
    Correlated,
}

/// Diagonal 0/1 projector over Pauli indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceProjector {
    n: usize,
    label: Subspace,
    mask: Vec<bool>,
}

impl SubspaceProjector {
    pub fn new(n: usize, label: Subspace) -> Result<Self> {
        check_qubits(n)?;
        if n != 2 && matches!(label, Subspace::Qubit1 | Subspace::Qubit2 | Subspace::Correlated) {
            return Err(Error::InvalidArgument(format!("{label:?} requires two qubits")));
        }
        let mask = PauliLabel::all(n)
            .map(|p| match label {
                Subspace::Identity => p.is_identity(),
                Subspace::NonIdentity => !p.is_identity(),
                Subspace::Qubit1 => p.qubit(0) != 0 && p.qubit(1) == 0,
                Subspace::Qubit2 => p.qubit(0) == 0 && p.qubit(1) != 0,
                Subspace::Correlated => p.qubit(0) != 0 && p.qubit(1) != 0,
            })
            .collect();
        Ok(Self { n, label, mask })
    }

    pub fn label(&self) -> Subspace {
        self.label
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.mask.get(index).copied().unwrap_or(false)
    }

    pub fn trace(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.mask.len(),
            self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }),
        ))
    }
}

/// `Tr(Π R) / Tr(Π)`.
pub fn project(r: &PauliTransferMatrix, pi: &SubspaceProjector) -> Result<f64> {
    if r.n != pi.n {
        return Err(Error::DimensionMismatch { expected: r.n, got: pi.n });
    }
    let tr = pi.trace();
    if tr == 0 {
        return Err(Error::EmptyProjector);
    }
    Ok(pi.indices().iter().map(|&i| r.m[(i, i)]).sum::<f64>() / tr as f64)
}
