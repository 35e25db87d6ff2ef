//! Random unitaries and channels for oracle suites.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::ptm::PauliTransferMatrix;

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Haar-random `d × d` unitary (QR of a Ginibre matrix with phase fix).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let qr = ginibre(d, d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..d {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Kraus set of a random CPTP map on `n` qubits with `rank` operators,
/// obtained by slicing a random isometry.
pub fn random_kraus<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Vec<DMatrix<Complex64>> {
    let d = 1 << n;
    let v = ginibre(rank * d, d, rng).qr().q();
    (0..rank).map(|k| v.rows(k * d, d).clone_owned()).collect()
}

pub fn random_channel<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<PauliTransferMatrix> {
    PauliTransferMatrix::from_kraus(&random_kraus(n, rank, rng), true)
}

/// Random channel close to the identity: `√(1−p)·U` mixed with a random Kraus set of weight `p`,
/// where `U` is a small random rotation.
pub fn random_weak_channel<R: Rng + ?Sized>(n: usize, strength: f64, rng: &mut R) -> Result<PauliTransferMatrix> {
    let d = 1 << n;
    let h = ginibre(d, d, rng);
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let u = crate::gates::unitary_propagator(&h, strength);
    let p = strength * strength;
    let mut kraus = vec![u * Complex64::new((1.0 - p).sqrt(), 0.0)];
    for k in random_kraus(n, 2, rng) {
        kraus.push(k * Complex64::new(p.sqrt(), 0.0));
    }
    PauliTransferMatrix::from_kraus(&kraus, true)
}
