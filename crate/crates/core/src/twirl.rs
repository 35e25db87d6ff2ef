//! Group twirls of Pauli transfer matrices.
//!
//! Every twirl has two routes: a brute-force average `Σ R_Uᵀ R R_U / |G|`
//! over an enumerated group, and a closed form obtained from the irreducible
//! decomposition of the group's PTM representation. The closed forms are
//! what the rest of the crate uses; the brute-force route is kept as an
//! oracle.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordGroup;
use crate::error::{Error, Result};
use crate::pauli::PauliLabel;
use crate::ptm::{project, PauliTransferMatrix, Subspace, SubspaceProjector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwirlGroup {
    /// Full Clifford group on all qubits (equivalently the unitary group).
    Clifford,
    CxC,
    CxI,
    IxC,
    Pauli,
}

/// Which qubit of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    One,
    Two,
}

impl Qubit {
    pub fn other(self) -> Qubit {
        match self {
            Qubit::One => Qubit::Two,
            Qubit::Two => Qubit::One,
        }
    }
}

/// Depolarizing parameters extracted by a twirl; only the ones defined for
/// the group are set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Alphas {
    pub full: Option<f64>,
    pub alpha_1_given_2: Option<f64>,
    pub alpha_2_given_1: Option<f64>,
    pub alpha_12: Option<f64>,
    pub alpha_1: Option<f64>,
    pub alpha_2: Option<f64>,
}

impl Alphas {
    /// `α₁₂ − α_{1|2} α_{2|1}` when all three are available.
    pub fn delta_alpha(&self) -> Option<f64> {
        Some(self.alpha_12? - self.alpha_1_given_2? * self.alpha_2_given_1?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwirlOutcome {
    pub twirled: PauliTransferMatrix,
    pub alphas: Alphas,
    pub group: TwirlGroup,
}

/// Block form of a single-subsystem twirl on two qubits.
///
/// `marginal` is the PTM of the untwirled qubit's map, and `gamma` is the
/// 4×4 matrix indexed by the untwirled qubit's Paulis that repeats on each
/// of the three non-identity sectors of the twirled qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemTwirlBlocks {
    pub twirled: Qubit,
    pub marginal: PauliTransferMatrix,
    pub gamma: DMatrix<f64>,
}

/// Two-qubit PTM index for Pauli `p` on `q` and Pauli `o` on the other qubit.
fn pair_index(q: Qubit, p: usize, o: usize) -> usize {
    match q {
        Qubit::One => 4 * p + o,
        Qubit::Two => 4 * o + p,
    }
}

impl SubsystemTwirlBlocks {
    /// `Γ₀₀`, the depolarizing parameter of the twirled qubit.
    pub fn alpha(&self) -> f64 {
        self.gamma[(0, 0)]
    }

    /// The 12×12 non-identity sector, `1₃ ⊗ Γ` in `(twirled, untwirled)` order.
    pub fn sector(&self) -> DMatrix<f64> {
        DMatrix::<f64>::identity(3, 3).kronecker(&self.gamma)
    }

    /// Reassembled 16×16 twirled PTM.
    pub fn assemble(&self) -> PauliTransferMatrix {
        let mut w = DMatrix::zeros(16, 16);
        for j in 0..4 {
            for l in 0..4 {
                w[(pair_index(self.twirled, 0, j), pair_index(self.twirled, 0, l))] = self.marginal.get(j, l);
                for p in 1..4 {
                    w[(pair_index(self.twirled, p, j), pair_index(self.twirled, p, l))] = self.gamma[(j, l)];
                }
            }
        }
        PauliTransferMatrix::from_matrix(2, w).expect("16x16")
    }
}

fn check_two_qubits(r: &PauliTransferMatrix) -> Result<()> {
    if r.num_qubits() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: r.num_qubits() });
    }
    Ok(())
}

/// `Σ_U R_Uᵀ R R_U / |G|` over an explicit list of orthogonal PTMs.
pub fn brute_force_twirl_over<'a, I>(r: &PauliTransferMatrix, elements: I) -> Result<PauliTransferMatrix>
where
    I: IntoIterator<Item = &'a PauliTransferMatrix>,
{
    let mut acc = DMatrix::zeros(r.size(), r.size());
    let mut count = 0usize;
    for u in elements {
        if u.num_qubits() != r.num_qubits() {
            return Err(Error::DimensionMismatch { expected: r.num_qubits(), got: u.num_qubits() });
        }
        acc += u.matrix().transpose() * r.matrix() * u.matrix();
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidArgument("empty group".into()));
    }
    PauliTransferMatrix::from_matrix(r.num_qubits(), acc / count as f64)
}

/// Group average over an enumerated Clifford group.
pub fn brute_force_twirl(r: &PauliTransferMatrix, group: &CliffordGroup) -> Result<PauliTransferMatrix> {
    brute_force_twirl_over(r, group.ptms())
}

/// Group average over the `4^n` Pauli conjugation channels.
pub fn brute_force_pauli_twirl(r: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
    let paulis: Vec<PauliTransferMatrix> =
        PauliLabel::all(r.num_qubits()).map(|k| PauliTransferMatrix::pauli_conjugation(&k)).collect();
    brute_force_twirl_over(r, paulis.iter())
}

/// Full Clifford twirl: `diag(1, α, …, α)` with `α = (Tr R − 1)/(d² − 1)`.
pub fn twirl_full_clifford(r: &PauliTransferMatrix) -> Result<TwirlOutcome> {
    let n = r.num_qubits();
    let pi = SubspaceProjector::new(n, Subspace::NonIdentity)?;
    let alpha = project(r, &pi)?;
    Ok(TwirlOutcome {
        twirled: PauliTransferMatrix::depolarizing(n, alpha),
        alphas: Alphas { full: Some(alpha), ..Default::default() },
        group: TwirlGroup::Clifford,
    })
}

/// `C⊗C` twirl: block diagonal with `α_{2|1}` on `I⊗𝐏`, `α_{1|2}` on `𝐏⊗I`
/// and `α₁₂` on `𝐏⊗𝐏`.
pub fn twirl_cxc(r: &PauliTransferMatrix) -> Result<TwirlOutcome> {
    check_two_qubits(r)?;
    let mut diag = vec![0.0; 16];
    let mut alpha_of = |label: Subspace| -> Result<f64> {
        let pi = SubspaceProjector::new(2, label)?;
        let a = project(r, &pi)?;
        for i in pi.indices() {
            diag[i] = a;
        }
        Ok(a)
    };
    let a1 = alpha_of(Subspace::Qubit1)?;
    let a2 = alpha_of(Subspace::Qubit2)?;
    let a12 = alpha_of(Subspace::Correlated)?;
    diag[0] = r.get(0, 0);
    Ok(TwirlOutcome {
        twirled: PauliTransferMatrix::from_diagonal(2, &diag)?,
        alphas: Alphas {
            alpha_1_given_2: Some(a1),
            alpha_2_given_1: Some(a2),
            alpha_12: Some(a12),
            ..Default::default()
        },
        group: TwirlGroup::CxC,
    })
}

/// Twirl over Cliffords on `twirled` only, in block form.
pub fn twirl_cxi(r: &PauliTransferMatrix, twirled: Qubit) -> Result<SubsystemTwirlBlocks> {
    check_two_qubits(r)?;
    let mut marginal = DMatrix::zeros(4, 4);
    let mut gamma = DMatrix::zeros(4, 4);
    for j in 0..4 {
        for l in 0..4 {
            marginal[(j, l)] = r.get(pair_index(twirled, 0, j), pair_index(twirled, 0, l));
            gamma[(j, l)] =
                (1..4).map(|p| r.get(pair_index(twirled, p, j), pair_index(twirled, p, l))).sum::<f64>() / 3.0;
        }
    }
    Ok(SubsystemTwirlBlocks { twirled, marginal: PauliTransferMatrix::from_matrix(1, marginal)?, gamma })
}

/// Single-subsystem twirl packaged as a [`TwirlOutcome`] with `α₁` or `α₂` set.
pub fn twirl_subsystem(r: &PauliTransferMatrix, twirled: Qubit) -> Result<TwirlOutcome> {
    let blocks = twirl_cxi(r, twirled)?;
    let mut alphas = Alphas::default();
    match twirled {
        Qubit::One => alphas.alpha_1 = Some(blocks.alpha()),
        Qubit::Two => alphas.alpha_2 = Some(blocks.alpha()),
    }
    Ok(TwirlOutcome {
        twirled: blocks.assemble(),
        alphas,
        group: match twirled {
            Qubit::One => TwirlGroup::CxI,
            Qubit::Two => TwirlGroup::IxC,
        },
    })
}

/// Pauli twirl: keeps only the diagonal.
pub fn pauli_twirl(r: &PauliTransferMatrix) -> PauliTransferMatrix {
    let diag: Vec<f64> = (0..r.size()).map(|i| r.get(i, i)).collect();
    PauliTransferMatrix::from_diagonal(r.num_qubits(), &diag).expect("matching size")
}

/// Irreducible decomposition over the standard Pauli basis.
///
/// `irreps[j][k]` lists, in a consistent order, the basis indices spanning
/// copy `k` of irrep `j`. All copies of one irrep must have the same size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrrepDecomposition {
    pub irreps: Vec<Vec<Vec<usize>>>,
}

fn indices_of(labels: &[&str]) -> Vec<usize> {
    labels.iter().map(|s| PauliLabel::parse(s).expect("valid label").index()).collect()
}

impl IrrepDecomposition {
    /// One irreducible block spanning all `size` basis vectors.
    pub fn single_block(size: usize) -> Self {
        Self { irreps: vec![vec![(0..size).collect()]] }
    }

    /// `𝕀 ⊕ σ` for the full Clifford group on `n` qubits.
    pub fn clifford(n: usize) -> Self {
        let size = 1 << (2 * n);
        Self { irreps: vec![vec![vec![0]], vec![(1..size).collect()]] }
    }

    /// Four distinct irreps of `C⊗C`.
    pub fn cxc() -> Self {
        Self {
            irreps: vec![
                vec![indices_of(&["II"])],
                vec![indices_of(&["IX", "IY", "IZ"])],
                vec![indices_of(&["XI", "YI", "ZI"])],
                vec![indices_of(&["XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"])],
            ],
        }
    }

    /// Four copies of the trivial irrep and four copies of `σ` for a
    /// single-subsystem Clifford group.
    pub fn subsystem(twirled: Qubit) -> Self {
        let copies = |p_range: std::ops::Range<usize>| -> Vec<Vec<usize>> {
            (0..4).map(|o| p_range.clone().map(|p| pair_index(twirled, p, o)).collect()).collect()
        };
        Self { irreps: vec![copies(0..1), copies(1..4)] }
    }

    /// `4^n` distinct one-dimensional irreps.
    pub fn pauli(n: usize) -> Self {
        Self { irreps: (0..1 << (2 * n)).map(|i| vec![vec![i]]).collect() }
    }

    fn validate(&self, size: usize) -> Result<()> {
        let mut seen = vec![false; size];
        for (j, copies) in self.irreps.iter().enumerate() {
            let dim = copies
                .first()
                .map(Vec::len)
                .ok_or_else(|| Error::InconsistentIrreps(format!("irrep {j} has no copies")))?;
            if dim == 0 {
                return Err(Error::InconsistentIrreps(format!("irrep {j} is empty")));
            }
            for (k, basis) in copies.iter().enumerate() {
                if basis.len() != dim {
                    return Err(Error::InconsistentIrreps(format!(
                        "copy {k} of irrep {j} has dimension {} instead of {dim}",
                        basis.len()
                    )));
                }
                for &i in basis {
                    if i >= size || std::mem::replace(&mut seen[i], true) {
                        return Err(Error::InconsistentIrreps(format!("basis index {i} out of range or repeated")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// General twirl from an irrep decomposition with multiplicities:
/// `Σ_{j,k,k'} Tr(Qᵀ_{jkk'} R) / Tr(Qᵀ_{jkk'} Q_{jkk'}) · Q_{jkk'}` with
/// `Q_{jkk'} = Σ_l |v_{j,k,l}⟩⟨v_{j,k',l}|`.
pub fn schur_general_twirl(r: &PauliTransferMatrix, decomposition: &IrrepDecomposition) -> Result<PauliTransferMatrix> {
    decomposition.validate(r.size())?;
    let mut out = DMatrix::zeros(r.size(), r.size());
    for copies in &decomposition.irreps {
        for bk in copies {
            for bk2 in copies {
                // Tr(Qᵀ R) = Σ_l R[v_{k,l}, v_{k',l}] and Tr(QᵀQ) = dim.
                let coeff = bk.iter().zip(bk2).map(|(&a, &b)| r.get(a, b)).sum::<f64>() / bk.len() as f64;
                for (&a, &b) in bk.iter().zip(bk2) {
                    out[(a, b)] += coeff;
                }
            }
        }
    }
    PauliTransferMatrix::from_matrix(r.num_qubits(), out)
}

/// `(Γ^m)₀₀` for each requested `m`.
pub fn gamma_decay_curve(blocks: &SubsystemTwirlBlocks, m_values: &[usize]) -> Result<Vec<f64>> {
    let g = &blocks.gamma;
    if g.nrows() != g.ncols() {
        return Err(Error::InvalidArgument("Γ must be square".into()));
    }
    let max_m = m_values.iter().copied().max().unwrap_or(0);
    // Only the first row of Γ^m is needed: propagate e₀ᵀ Γ^m.
    let mut row = nalgebra::RowDVector::zeros(g.ncols());
    row[0] = 1.0;
    let mut by_m = Vec::with_capacity(max_m + 1);
    by_m.push(row[0]);
    for _ in 0..max_m {
        row = &row * g;
        by_m.push(row[0]);
    }
    Ok(m_values.iter().map(|&m| by_m[m]).collect())
}

/// Largest `|(Γ^m)₀₀ − α^m|` over `m_values`: the departure of a
/// single-subsystem decay from a single exponential.
pub fn gamma_deviation(blocks: &SubsystemTwirlBlocks, m_values: &[usize]) -> Result<f64> {
    let alpha = blocks.alpha();
    let curve = gamma_decay_curve(blocks, m_values)?;
    Ok(m_values.iter().zip(curve).map(|(&m, v)| (v - alpha.powi(m as i32)).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{Generator, GroupKind};
    use crate::random::random_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_fixed_by_every_twirl() {
        let c1 = CliffordGroup::generate_c1().unwrap();
        let id1 = PauliTransferMatrix::identity(1);
        assert!(brute_force_twirl(&id1, &c1).unwrap().approx_eq(&id1, 1e-14));
        let id2 = PauliTransferMatrix::identity(2);
        let out = twirl_cxc(&id2).unwrap();
        assert_eq!(out.alphas.alpha_12, Some(1.0));
        assert!(out.twirled.approx_eq(&id2, 0.0));
        let blocks = twirl_cxi(&id2, Qubit::One).unwrap();
        assert_eq!(blocks.gamma, DMatrix::identity(4, 4));
        assert_eq!(twirl_full_clifford(&id1).unwrap().alphas.full, Some(1.0));
    }

    #[test]
    fn unitary_twirl_over_c1_is_depolarizing() {
        let c1 = CliffordGroup::generate_c1().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = crate::random::haar_unitary(2, &mut rng);
        let r = PauliTransferMatrix::from_unitary(&u).unwrap();
        let w = brute_force_twirl(&r, &c1).unwrap();
        let alpha = (r.trace() - 1.0) / 3.0;
        assert!(w.approx_eq(&PauliTransferMatrix::depolarizing(1, alpha), 1e-12));
        let again = brute_force_twirl(&w, &c1).unwrap();
        assert!(again.approx_eq(&w, 1e-12));
    }

    #[test]
    fn full_clifford_cases() {
        let dep0 = PauliTransferMatrix::depolarizing(1, 0.0);
        assert_eq!(twirl_full_clifford(&dep0).unwrap().alphas.full, Some(0.0));

        let gamma: f64 = 0.1;
        let c = |x: f64| num_complex::Complex64::new(x, 0.0);
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
        let r = PauliTransferMatrix::from_kraus(&[k0, k1], true).unwrap();
        let out = twirl_full_clifford(&r).unwrap();
        assert!((out.alphas.full.unwrap() - (r.trace() - 1.0) / 3.0).abs() < 1e-15);
        let c1 = CliffordGroup::generate_c1().unwrap();
        assert!(out.twirled.approx_eq(&brute_force_twirl(&r, &c1).unwrap(), 1e-12));
    }

    #[test]
    fn cxc_product_channel_has_no_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_channel(1, 2, &mut rng).unwrap();
        let b = random_channel(1, 3, &mut rng).unwrap();
        let out = twirl_cxc(&a.tensor(&b).unwrap()).unwrap();
        assert!(out.alphas.delta_alpha().unwrap().abs() < 1e-12);
    }

    #[test]
    fn zz_rotation_correlation_matches_closed_form() {
        // exp(−iθ/2 ZZ): α_{1|2} = α_{2|1} = (1 + 2cosθ)/3, α₁₂ = (5 + 4cosθ)/9,
        // so δα = 4 sin²θ / 9.
        let theta: f64 = 0.1;
        let zz = PauliLabel::parse("ZZ").unwrap().matrix();
        let u = crate::gates::unitary_propagator(&zz, theta / 2.0);
        let r = PauliTransferMatrix::from_unitary(&u).unwrap();
        let out = twirl_cxc(&r).unwrap();
        let c = theta.cos();
        assert!((out.alphas.alpha_1_given_2.unwrap() - (1.0 + 2.0 * c) / 3.0).abs() < 1e-14);
        assert!((out.alphas.alpha_12.unwrap() - (5.0 + 4.0 * c) / 9.0).abs() < 1e-14);
        let da = out.alphas.delta_alpha().unwrap();
        assert!((da - 4.0 * theta.sin().powi(2) / 9.0).abs() < 1e-14);
        let cxc = CliffordGroup::product_group(GroupKind::CxC).unwrap();
        assert!(out.twirled.approx_eq(&brute_force_twirl(&r, &cxc).unwrap(), 1e-12));
    }

    #[test]
    fn cxi_block_cases() {
        let alpha = 0.97;
        let r = PauliTransferMatrix::depolarizing(1, alpha).tensor(&PauliTransferMatrix::identity(1)).unwrap();
        let blocks = twirl_cxi(&r, Qubit::One).unwrap();
        assert!((&blocks.gamma - DMatrix::<f64>::identity(4, 4) * alpha).amax() < 1e-15);
        assert!(blocks.marginal.approx_eq(&PauliTransferMatrix::identity(1), 0.0));
        assert_eq!(blocks.sector().nrows(), 12);
    }

    #[test]
    fn pauli_twirl_cases() {
        let d = PauliTransferMatrix::from_diagonal(1, &[1.0, 0.5, 0.2, -0.1]).unwrap();
        assert_eq!(pauli_twirl(&d), d);
        let r = Generator::XPlus90.ptm();
        let expected = PauliTransferMatrix::from_diagonal(1, &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(pauli_twirl(&r).approx_eq(&expected, 1e-15));
    }

    #[test]
    fn schur_specializations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random_channel(2, 3, &mut rng).unwrap();
        let single = schur_general_twirl(&r, &IrrepDecomposition::single_block(16)).unwrap();
        let expected = DMatrix::<f64>::identity(16, 16) * (r.trace() / 16.0);
        assert!((single.matrix() - expected).amax() < 1e-14);
        let cxc = schur_general_twirl(&r, &IrrepDecomposition::cxc()).unwrap();
        assert!(cxc.approx_eq(&twirl_cxc(&r).unwrap().twirled, 1e-14));
        for q in [Qubit::One, Qubit::Two] {
            let general = schur_general_twirl(&r, &IrrepDecomposition::subsystem(q)).unwrap();
            assert!(general.approx_eq(&twirl_cxi(&r, q).unwrap().assemble(), 1e-14));
        }
    }

    #[test]
    fn schur_rejects_inconsistent_decompositions() {
        let r = PauliTransferMatrix::identity(1);
        let bad = IrrepDecomposition { irreps: vec![vec![vec![0]], vec![vec![1, 2], vec![3]]] };
        assert!(matches!(schur_general_twirl(&r, &bad), Err(Error::InconsistentIrreps(_))));
        let repeated = IrrepDecomposition { irreps: vec![vec![vec![0, 0]]] };
        assert!(schur_general_twirl(&r, &repeated).is_err());
    }

    #[test]
    fn gamma_curve_cases() {
        let alpha: f64 = 0.98;
        let r = PauliTransferMatrix::depolarizing(1, alpha).tensor(&PauliTransferMatrix::identity(1)).unwrap();
        let blocks = twirl_cxi(&r, Qubit::One).unwrap();
        let ms = [0, 1, 5, 40];
        let curve = gamma_decay_curve(&blocks, &ms).unwrap();
        for (&m, v) in ms.iter().zip(&curve) {
            assert!((v - alpha.powi(m as i32)).abs() < 1e-15);
        }
        assert_eq!(curve[0], 1.0);
        assert!(gamma_deviation(&blocks, &ms).unwrap() < 1e-15);
    }
}
