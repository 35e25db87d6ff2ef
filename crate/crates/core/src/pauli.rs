//! Pauli operator labels.
//!
//! Each single-qubit Pauli is encoded as a bit pair `(v, w)` with
//! `I -> 00`, `X -> 01`, `Y -> 10`, `Z -> 11`. An n-qubit label is a pair of
//! bit vectors, and its index orders labels lexicographically over the
//! interleaved bits with qubit 1 as the most significant pair. For two qubits
//! this means `index = 4 * p1 + p2` with `p = 0, 1, 2, 3` for `I, X, Y, Z`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 2;

const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliLabel {
    n: usize,
    v: u8,
    w: u8,
}

impl PauliLabel {
    pub fn identity(n: usize) -> Self {
        Self { n, v: 0, w: 0 }
    }

    /// Builds a label from its index in `[0, 4^n)`.
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!("unsupported qubit count {n}")));
        }
        if index >= 1 << (2 * n) {
            return Err(Error::InvalidArgument(format!("Pauli index {index} out of range for {n} qubits")));
        }
        let (mut v, mut w) = (0u8, 0u8);
        for q in 0..n {
            let pair = (index >> (2 * (n - 1 - q))) & 0b11;
            v |= (((pair >> 1) & 1) as u8) << q;
            w |= ((pair & 1) as u8) << q;
        }
        Ok(Self { n, v, w })
    }

    /// Builds a label from bit vectors; bit `q` belongs to qubit `q + 1`.
    pub fn from_bits(v: &[bool], w: &[bool]) -> Result<Self> {
        if v.len() != w.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), got: w.len() });
        }
        let n = v.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!("unsupported qubit count {n}")));
        }
        let pack = |bits: &[bool]| bits.iter().enumerate().fold(0u8, |acc, (q, &b)| acc | ((b as u8) << q));
        Ok(Self { n, v: pack(v), w: pack(w) })
    }

    /// Parses strings such as `"XI"` or `"z"`.
    pub fn parse(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut index = 0;
        for c in s.chars() {
            let p = LETTERS
                .iter()
                .position(|&l| l == c.to_ascii_uppercase())
                .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli letter {c:?}")))?;
            index = index * 4 + p;
        }
        Self::from_index(n, index)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> usize {
        (0..self.n).fold(0, |acc, q| acc * 4 + self.qubit(q))
    }

    /// Single-qubit Pauli index (0..4) acting on qubit `q` (zero based).
    pub fn qubit(&self, q: usize) -> usize {
        (((self.v >> q) & 1) as usize) << 1 | ((self.w >> q) & 1) as usize
    }

    pub fn v_bits(&self) -> Vec<bool> {
        (0..self.n).map(|q| (self.v >> q) & 1 == 1).collect()
    }

    pub fn w_bits(&self) -> Vec<bool> {
        (0..self.n).map(|q| (self.w >> q) & 1 == 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.v == 0 && self.w == 0
    }

    /// Symplectic product: `true` when the two labels anticommute.
    pub fn anticommutes(&self, other: &PauliLabel) -> bool {
        let s = (self.v & other.w).count_ones() + (self.w & other.v).count_ones();
        s % 2 == 1
    }

    /// Dense complex matrix of the operator (tensor product over qubits).
    pub fn matrix(&self) -> DMatrix<Complex64> {
        (0..self.n)
            .map(|q| single_qubit_matrix(self.qubit(q)))
            .reduce(|acc, m| acc.kronecker(&m))
            .expect("at least one qubit")
    }

    pub fn all(n: usize) -> impl Iterator<Item = PauliLabel> {
        (0..1usize << (2 * n)).map(move |i| PauliLabel::from_index(n, i).expect("index in range"))
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", LETTERS[self.qubit(q)])?;
        }
        Ok(())
    }
}

pub fn single_qubit_matrix(p: usize) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match p {
        0 => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("single-qubit Pauli index {p} out of range"),
    }
}

/// Pauli matrices for all labels of `n` qubits, in index order.
pub fn pauli_basis(n: usize) -> Vec<DMatrix<Complex64>> {
    PauliLabel::all(n).map(|p| p.matrix()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for n in 1..=2 {
            for i in 0..1 << (2 * n) {
                let p = PauliLabel::from_index(n, i).unwrap();
                assert_eq!(p.index(), i);
                let q = PauliLabel::from_bits(&p.v_bits(), &p.w_bits()).unwrap();
                assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn encoding_and_ordering() {
        let names: Vec<String> = PauliLabel::all(1).map(|p| p.to_string()).collect();
        assert_eq!(names, ["I", "X", "Y", "Z"]);
        let y = PauliLabel::parse("Y").unwrap();
        assert_eq!((y.v_bits()[0], y.w_bits()[0]), (true, false));
        assert_eq!(PauliLabel::parse("XI").unwrap().index(), 4);
        assert_eq!(PauliLabel::parse("IX").unwrap().index(), 1);
        assert_eq!(PauliLabel::parse("ZZ").unwrap().index(), 15);
        assert!(PauliLabel::from_index(2, 0).unwrap().is_identity());
    }

    #[test]
    fn symplectic_form_matches_matrix_commutation() {
        for a in PauliLabel::all(2) {
            for b in PauliLabel::all(2) {
                let (ma, mb) = (a.matrix(), b.matrix());
                let anti = (&ma * &mb + &mb * &ma).norm() < 1e-12;
                assert_eq!(anti, a.anticommutes(&b), "{a} {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PauliLabel::from_index(1, 4).is_err());
        assert!(PauliLabel::from_index(3, 0).is_err());
        assert!(PauliLabel::parse("XQ").is_err());
    }
}
