//! Two-qubit cross-talk Hamiltonian and its time evolution.
//!
//! Both qubits are described in frames rotating at their drive frequencies.
//! Drive terms acting on the drive's own qubit are static there, while the
//! terms a drive induces on the partner qubit oscillate at the detuning
//! `Δ = ω₁ − ω₂` (phase `+Δt` for drive 1, `−Δt` for drive 2).

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use statrs::function::erf::erf;
use std::f64::consts::{FRAC_PI_2, PI};

use super::device::{Calibration, Couplings, DeviceParams};
use crate::clifford::Generator;
use crate::error::{Error, Result};
use crate::ptm::PauliTransferMatrix;
use crate::twirl::Qubit;

/// Entry-wise PTM change below which step doubling stops.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;
/// Largest number of integration steps per pulse.
pub const MAX_STEPS: usize = 1 << 17;

type M4 = Matrix4<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveAxis {
    X,
    Y,
}

impl DriveAxis {
    /// Phase of the drive in the `cos φ X + sin φ Y` convention.
    pub fn phase(self) -> f64 {
        match self {
            DriveAxis::X => 0.0,
            DriveAxis::Y => FRAC_PI_2,
        }
    }
}

/// A flat-top pulse with Gaussian rise and fall, scaled so that
/// `∫ε(t)dt = rotation_angle / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveEnvelope {
    pub target: Qubit,
    pub axis: DriveAxis,
    pub rotation_angle: f64,
    pub gate_time: f64,
    pub edge_fraction: f64,
}

impl DriveEnvelope {
    pub fn new(target: Qubit, axis: DriveAxis, rotation_angle: f64, gate_time: f64, edge_fraction: f64) -> Self {
        Self { target, axis, rotation_angle, gate_time, edge_fraction }
    }

    pub fn for_generator(target: Qubit, g: Generator, p: &DeviceParams) -> Self {
        let axis = if g.axis() == 1 { DriveAxis::X } else { DriveAxis::Y };
        Self::new(target, axis, g.angle(), p.gate_time, p.edge_fraction)
    }

    /// The same pulse with negated amplitude.
    pub fn negated(&self) -> Self {
        Self { rotation_angle: -self.rotation_angle, ..*self }
    }

    /// Unit-height envelope shape.
    pub fn shape(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.gate_time {
            return 0.0;
        }
        let rise = self.edge_fraction * self.gate_time;
        if rise <= 0.0 {
            return 1.0;
        }
        let sigma = rise / 2.0;
        let g = |u: f64| (-u * u / (2.0 * sigma * sigma)).exp();
        if t < rise {
            g(t - rise)
        } else if t > self.gate_time - rise {
            g(t - (self.gate_time - rise))
        } else {
            1.0
        }
    }

    /// `∫ shape(t) dt` over the gate.
    pub fn shape_area(&self) -> f64 {
        let rise = self.edge_fraction * self.gate_time;
        if rise <= 0.0 {
            return self.gate_time;
        }
        let sigma = rise / 2.0;
        let edge = sigma * (PI / 2.0).sqrt() * erf(rise / (sigma * 2f64.sqrt()));
        self.gate_time - 2.0 * rise + 2.0 * edge
    }

    /// Calibrated amplitude `ε(t)` in rad/s.
    pub fn amplitude(&self, t: f64) -> f64 {
        if self.gate_time <= 0.0 {
            return 0.0;
        }
        self.rotation_angle / 2.0 / self.shape_area() * self.shape(t)
    }

    /// Amplitudes at the midpoints of `steps` equal intervals, rescaled so the
    /// discrete area `Σ ε h` equals `rotation_angle / 2` exactly.
    pub fn samples(&self, steps: usize) -> Vec<f64> {
        if self.gate_time <= 0.0 || steps == 0 {
            return vec![0.0; steps];
        }
        let h = self.gate_time / steps as f64;
        let shape: Vec<f64> = (0..steps).map(|k| self.shape((k as f64 + 0.5) * h)).collect();
        let area: f64 = shape.iter().sum::<f64>() * h;
        shape.into_iter().map(|s| self.rotation_angle / 2.0 / area * s).collect()
    }
}

/// Instantaneous drive: calibrated amplitude and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveValue {
    pub amplitude: f64,
    pub phase: f64,
}

/// Time-independent data entering the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Frame {
    c: Couplings,
    delta: f64,
    residual: [f64; 2],
    scale: [f64; 2],
}

impl Frame {
    fn new(p: &DeviceParams) -> Result<Self> {
        let c = p.couplings()?;
        let (residual, scale) = match p.calibration {
            Calibration::Bare => ([0.0; 2], [1.0; 2]),
            // Frames track the partner-ground frequency `ω − ζ/2`, and pulses are
            // tuned against the Rabi rate seen with the partner in |0⟩.
            Calibration::Ground => ([c.zeta / 2.0; 2], [1.0 / (1.0 + c.m12 * c.mu2), 1.0 / (1.0 - c.m21 * c.mu1)]),
        };
        Ok(Self { c, delta: p.delta(), residual, scale })
    }
}

struct Ops {
    xi: M4,
    yi: M4,
    zi: M4,
    ix: M4,
    iy: M4,
    iz: M4,
    zx: M4,
    zy: M4,
    xz: M4,
    yz: M4,
    zz: M4,
}

fn pauli2(a: usize, b: usize) -> M4 {
    let pa = crate::pauli::single_qubit_matrix(a);
    let pb = crate::pauli::single_qubit_matrix(b);
    let k = pa.kronecker(&pb);
    M4::from_fn(|r, c| k[(r, c)])
}

impl Ops {
    fn new() -> Self {
        Self {
            xi: pauli2(1, 0),
            yi: pauli2(2, 0),
            zi: pauli2(3, 0),
            ix: pauli2(0, 1),
            iy: pauli2(0, 2),
            iz: pauli2(0, 3),
            zx: pauli2(3, 1),
            zy: pauli2(3, 2),
            xz: pauli2(1, 3),
            yz: pauli2(2, 3),
            zz: pauli2(3, 3),
        }
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn hamiltonian(ops: &Ops, f: &Frame, d1: Option<DriveValue>, d2: Option<DriveValue>, t: f64) -> M4 {
    let c = &f.c;
    let mut h = ops.zz * re(c.zeta / 4.0) - ops.zi * re(f.residual[0] / 2.0) - ops.iz * re(f.residual[1] / 2.0);
    if let Some(d) = d1 {
        let e = d.amplitude * f.scale[0];
        let (c0, s0) = (d.phase.cos(), d.phase.sin());
        let off = f.delta * t + d.phase;
        let (co, so) = (off.cos(), off.sin());
        let a_1 = ops.xi * re(c0) + ops.yi * re(s0);
        let a_1z = ops.xz * re(c0) + ops.yz * re(s0);
        let b_2 = ops.ix * re(co) + ops.iy * re(so);
        let b_z2 = ops.zx * re(co) + ops.zy * re(so);
        h += (a_1 + b_2 * re(c.m12 - c.nu1) - b_z2 * re(c.mu1) + a_1z * re(c.m12 * c.mu2)) * re(e);
    }
    if let Some(d) = d2 {
        let e = d.amplitude * f.scale[1];
        let (c0, s0) = (d.phase.cos(), d.phase.sin());
        let off = -f.delta * t + d.phase;
        let (co, so) = (off.cos(), off.sin());
        let a_2 = ops.ix * re(c0) + ops.iy * re(s0);
        let a_z2 = ops.zx * re(c0) + ops.zy * re(s0);
        let b_1 = ops.xi * re(co) + ops.yi * re(so);
        let b_1z = ops.xz * re(co) + ops.yz * re(so);
        h += (a_2 + b_1 * re(c.m21 + c.nu2) + b_1z * re(c.mu2) - a_z2 * re(c.m21 * c.mu1)) * re(e);
    }
    h
}

/// The cross-talk Hamiltonian at time `t` (rad/s), with each drive's
/// calibrated amplitude taken from its envelope.
pub fn crosstalk_hamiltonian(
    p: &DeviceParams,
    d1: Option<&DriveEnvelope>,
    d2: Option<&DriveEnvelope>,
    t: f64,
) -> Result<DMatrix<Complex64>> {
    let frame = Frame::new(p)?;
    let value = |d: Option<&DriveEnvelope>| d.map(|e| DriveValue { amplitude: e.amplitude(t), phase: e.axis.phase() });
    let h = hamiltonian(&Ops::new(), &frame, value(d1), value(d2), t);
    Ok(DMatrix::from_fn(4, 4, |r, c| h[(r, c)]))
}

fn expm4(a: &M4) -> M4 {
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * 4.0;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = a * re(scale);
    let mut result = M4::identity();
    let mut term = M4::identity();
    for k in 1..=18 {
        term = term * a * re(1.0 / k as f64);
        result += term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result * result;
    }
    result
}

fn split_drives(drives: &[DriveEnvelope], gate_time: f64) -> Result<[Option<&DriveEnvelope>; 2]> {
    let mut out = [None, None];
    for d in drives {
        if (d.gate_time - gate_time).abs() > 1e-9 * gate_time.max(1e-30) {
            return Err(Error::InvalidArgument("drive envelope does not span the gate time".into()));
        }
        let q = match d.target {
            Qubit::One => 0,
            Qubit::Two => 1,
        };
        if out[q].replace(d).is_some() {
            return Err(Error::InvalidArgument(format!("two drives target qubit {}", q + 1)));
        }
    }
    Ok(out)
}

/// Time-ordered propagator over one gate with `steps` midpoint steps.
pub fn evolve_unitary(p: &DeviceParams, drives: &[DriveEnvelope], steps: usize) -> Result<DMatrix<Complex64>> {
    if steps < 16 {
        return Err(Error::InvalidArgument("at least 16 integration steps are required".into()));
    }
    let [d1, d2] = split_drives(drives, p.gate_time)?;
    if p.gate_time <= 0.0 {
        return Ok(DMatrix::identity(4, 4));
    }
    let frame = Frame::new(p)?;
    let ops = Ops::new();
    let h = p.gate_time / steps as f64;
    let samples = |d: Option<&DriveEnvelope>| d.map(|e| (e.samples(steps), e.axis.phase()));
    let (s1, s2) = (samples(d1), samples(d2));
    let value =
        |s: &Option<(Vec<f64>, f64)>, k: usize| s.as_ref().map(|(a, ph)| DriveValue { amplitude: a[k], phase: *ph });
    let mut u = M4::identity();
    for k in 0..steps {
        let t = (k as f64 + 0.5) * h;
        let hk = hamiltonian(&ops, &frame, value(&s1, k), value(&s2, k), t);
        u = expm4(&(hk * Complex64::new(0.0, -h))) * u;
    }
    Ok(DMatrix::from_fn(4, 4, |r, c| u[(r, c)]))
}

/// PTM of the gate for a fixed number of steps.
pub fn evolve_to_ptm(p: &DeviceParams, drives: &[DriveEnvelope], steps: usize) -> Result<PauliTransferMatrix> {
    PauliTransferMatrix::from_unitary_with_tolerance(&evolve_unitary(p, drives, steps)?, 1e-9)
}

/// PTM of the gate, doubling the step count from `p.initial_steps` until
/// no entry changes by more than [`CONVERGENCE_TOLERANCE`]. Returns the
/// PTM and the step count used.
pub fn evolve_converged(p: &DeviceParams, drives: &[DriveEnvelope]) -> Result<(PauliTransferMatrix, usize)> {
    let mut steps = p.initial_steps.max(16);
    let mut prev = evolve_to_ptm(p, drives, steps)?;
    loop {
        if steps * 2 > MAX_STEPS {
            let next = evolve_to_ptm(p, drives, steps)?;
            return Err(Error::NotConverged { steps, change: next.max_abs_diff(&prev) });
        }
        steps *= 2;
        let next = evolve_to_ptm(p, drives, steps)?;
        let change = next.max_abs_diff(&prev);
        if change < CONVERGENCE_TOLERANCE {
            return Ok((next, steps));
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Generator;
    use crate::gates::rotation;

    fn decoupled() -> DeviceParams {
        let mut p = DeviceParams::sample_a();
        p.set_couplings(Couplings::zero());
        p
    }

    #[test]
    fn no_drives_and_no_coupling_gives_zero() {
        let p = decoupled();
        let h = crosstalk_hamiltonian(&p, None, None, 3e-9).unwrap();
        assert!(h.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn spurious_drive_on_partner() {
        let mut p = decoupled();
        p.calibration = Calibration::Bare;
        p.m12 = Some(0.19);
        p.nu1 = Some(-0.025);
        p.delta_override = Some(0.0);
        let d = DriveEnvelope::for_generator(Qubit::One, Generator::X180, &p);
        let t = p.gate_time / 2.0;
        let h = crosstalk_hamiltonian(&p, Some(&d), None, t).unwrap();
        let ix = pauli2(0, 1);
        let coef = (0..4).map(|r| (0..4).map(|c| ix[(c, r)] * h[(r, c)]).sum::<Complex64>()).sum::<Complex64>() / 4.0;
        assert!((coef.re - (0.19 + 0.025) * d.amplitude(t)).abs() < 1e-6 * d.amplitude(t));
    }

    #[test]
    fn zz_phase_after_half_period() {
        let mut p = decoupled();
        p.calibration = Calibration::Bare;
        let zeta = 2.0 * PI * 1.1e6;
        p.zeta = Some(zeta);
        p.gate_time = 1.0 / (2.0 * 1.1e6);
        let u = evolve_unitary(&p, &[], 16).unwrap();
        // exp(−iπ/4 ZZ): |00⟩ and |01⟩ differ by a relative phase π/2.
        let rel = u[(1, 1)] / u[(0, 0)];
        assert!((rel - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn shape_area_matches_quadrature() {
        let d = DriveEnvelope::new(Qubit::One, DriveAxis::X, PI, 20e-9, 0.25);
        let n = 200_000;
        let h = d.gate_time / n as f64;
        let num: f64 = (0..n).map(|k| d.shape((k as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((num - d.shape_area()).abs() < 1e-9 * d.gate_time);
        let s: f64 = d.samples(64).iter().sum::<f64>() * d.gate_time / 64.0;
        assert!((s - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_pi_pulse_is_exact() {
        let p = decoupled();
        let d = DriveEnvelope::for_generator(Qubit::One, Generator::X180, &p);
        let (r, _) = evolve_converged(&p, &[d]).unwrap();
        let ideal = PauliTransferMatrix::from_unitary(&rotation(1, PI).kronecker(&rotation(0, 0.0))).unwrap();
        assert!(r.approx_eq(&ideal, 1e-8));
    }

    #[test]
    fn negated_envelope_inverts_rotation() {
        let p = decoupled();
        for g in Generator::ALL {
            let d = DriveEnvelope::for_generator(Qubit::Two, g, &p);
            let a = evolve_to_ptm(&p, &[d], 64).unwrap();
            let b = evolve_to_ptm(&p, &[d.negated()], 64).unwrap();
            assert!(b.compose(&a).unwrap().approx_eq(&PauliTransferMatrix::identity(2), 1e-10));
        }
    }

    #[test]
    fn zero_duration_is_identity() {
        let mut p = DeviceParams::sample_a();
        p.gate_time = 0.0;
        let d = DriveEnvelope::for_generator(Qubit::One, Generator::XPlus90, &p);
        assert!(evolve_to_ptm(&p, &[d], 16).unwrap().approx_eq(&PauliTransferMatrix::identity(2), 1e-14));
    }

    #[test]
    fn sample_a_disturbs_the_idle_qubit() {
        let p = DeviceParams::sample_a();
        let d = DriveEnvelope::for_generator(Qubit::One, Generator::XPlus90, &p);
        let (r, _) = evolve_converged(&p, &[d]).unwrap();
        let ideal = Generator::XPlus90.ptm().tensor(&PauliTransferMatrix::identity(1)).unwrap();
        let dev = r.max_abs_diff(&ideal);
        assert!(dev > 1e-3 && dev < 0.2, "deviation {dev}");
        assert!(r.is_trace_preserving(1e-9));
    }

    #[test]
    fn rejects_duplicate_targets_and_few_steps() {
        let p = DeviceParams::sample_a();
        let d = DriveEnvelope::for_generator(Qubit::One, Generator::X180, &p);
        assert!(evolve_to_ptm(&p, &[d, d], 64).is_err());
        assert!(evolve_to_ptm(&p, &[d], 8).is_err());
    }
}
