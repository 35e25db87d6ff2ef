//! Per-gate error channels and model-based predictions of decay parameters.

pub mod device;
pub mod hamiltonian;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

use crate::clifford::{CliffordElement, CliffordGroup, Generator, GroupKind, Slot};
use crate::error::{Error, Result};
use crate::ptm::PauliTransferMatrix;
use crate::twirl::{twirl_cxc, twirl_subsystem, Alphas, Qubit, TwirlOutcome};

pub use device::{parse_key_values, Calibration, Couplings, DeviceParams, KeyValue};
pub use hamiltonian::{
    crosstalk_hamiltonian, evolve_converged, evolve_to_ptm, evolve_unitary, DriveAxis, DriveEnvelope, DriveValue,
};

/// Single-qubit amplitude damping followed by pure dephasing, so that the
/// transverse components decay as `e^{−t/T₂}` and the longitudinal one
/// relaxes towards |0⟩ as `e^{−t/T₁}`.
pub fn decoherence_ptm(t1: f64, t2: f64, t: f64) -> Result<PauliTransferMatrix> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::InvalidParams("coherence times must be positive".into()));
    }
    if t2 > 2.0 * t1 * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!("T2 = {t2} exceeds 2·T1 = {}", 2.0 * t1)));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument("negative duration".into()));
    }
    let e1 = (-t / t1).exp();
    let e2 = (-t / t2).exp();
    let mut m = nalgebra::DMatrix::zeros(4, 4);
    m[(0, 0)] = 1.0;
    m[(1, 1)] = e2;
    m[(2, 2)] = e2;
    m[(3, 3)] = e1;
    m[(3, 0)] = 1.0 - e1;
    PauliTransferMatrix::from_matrix(1, m)
}

/// Where error channels are attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Granularity {
    /// After every generator pulse, including idle slots.
    #[default]
    PerGenerator,
    /// Once after each Clifford. Cross-talk is still evaluated per pulse
    /// since it is part of the gate itself.
    PerClifford,
}

/// Deterministic two-qubit error model.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Ideal,
    /// Independent depolarizing channels on each qubit.
    Depolarizing {
        alpha1: f64,
        alpha2: f64,
    },
    /// Two-qubit depolarizing channel.
    JointDepolarizing {
        alpha: f64,
    },
    /// T₁/T₂ decay of both qubits over one gate time.
    Decoherence(DeviceParams),
    /// Coherent gate errors from the cross-talk Hamiltonian.
    CrossTalk(DeviceParams),
    /// Coherent `exp(−iθ/2 ZZ)` after every gate.
    CoherentZz {
        angle: f64,
    },
    /// A fixed two-qubit channel after every gate.
    Channel(PauliTransferMatrix),
    /// Error factors applied in list order after the ideal gate.
    Composite(Vec<NoiseModel>),
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Ideal => write!(f, "ideal"),
            NoiseModel::Depolarizing { alpha1, alpha2 } => write!(f, "depolarizing(alpha1={alpha1}, alpha2={alpha2})"),
            NoiseModel::JointDepolarizing { alpha } => write!(f, "joint-depolarizing(alpha={alpha})"),
            NoiseModel::Decoherence(p) => {
                write!(f, "decoherence(T1={:?}, T2={:?}, gate_time={})", p.t1, p.t2, p.gate_time)
            }
            NoiseModel::CrossTalk(p) => {
                write!(f, "crosstalk(gate_time={}, calibration={:?})", p.gate_time, p.calibration)
            }
            NoiseModel::CoherentZz { angle } => write!(f, "coherent-zz(angle={angle})"),
            NoiseModel::Channel(_) => write!(f, "channel"),
            NoiseModel::Composite(parts) => {
                write!(f, "composite[")?;
                for (i, m) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{m}")?;
                }
                write!(f, "]")
            }
        }
    }
}

fn ideal_factor(g: Option<Generator>) -> PauliTransferMatrix {
    g.map_or_else(|| PauliTransferMatrix::identity(1), Generator::ptm)
}

/// Ideal PTM of a pulse slot.
pub fn ideal_slot(slot: Slot) -> PauliTransferMatrix {
    ideal_factor(slot[0]).tensor(&ideal_factor(slot[1])).expect("single-qubit factors")
}

fn check_alpha(a: f64, lo: f64) -> Result<()> {
    if !(lo..=1.0).contains(&a) {
        return Err(Error::InvalidParams(format!("depolarizing parameter {a} outside [{lo}, 1]")));
    }
    Ok(())
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Ideal | NoiseModel::CoherentZz { .. } => Ok(()),
            NoiseModel::Depolarizing { alpha1, alpha2 } => {
                check_alpha(*alpha1, -1.0 / 3.0)?;
                check_alpha(*alpha2, -1.0 / 3.0)
            }
            NoiseModel::JointDepolarizing { alpha } => check_alpha(*alpha, -1.0 / 15.0),
            NoiseModel::Decoherence(p) => p.validate(),
            NoiseModel::CrossTalk(p) => {
                p.validate()?;
                p.couplings().map(|_| ())
            }
            NoiseModel::Channel(r) => {
                if r.num_qubits() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: r.num_qubits() });
                }
                if !r.is_trace_preserving(1e-9) {
                    return Err(Error::NotTracePreserving { deviation: (r.get(0, 0) - 1.0).abs() });
                }
                Ok(())
            }
            NoiseModel::Composite(parts) => parts.iter().try_for_each(NoiseModel::validate),
        }
    }

    /// True when the error depends on which gate is played.
    pub fn is_gate_dependent(&self) -> bool {
        match self {
            NoiseModel::CrossTalk(_) => true,
            NoiseModel::Composite(parts) => parts.iter().any(NoiseModel::is_gate_dependent),
            _ => false,
        }
    }

    /// Error channel `Λ` attached to one pulse slot, so that the noisy slot
    /// is `Λ · ideal`.
    pub fn slot_error(&self, slot: Slot) -> Result<PauliTransferMatrix> {
        Ok(match self {
            NoiseModel::Ideal => PauliTransferMatrix::identity(2),
            NoiseModel::Depolarizing { alpha1, alpha2 } => {
                PauliTransferMatrix::depolarizing(1, *alpha1).tensor(&PauliTransferMatrix::depolarizing(1, *alpha2))?
            }
            NoiseModel::JointDepolarizing { alpha } => PauliTransferMatrix::depolarizing(2, *alpha),
            NoiseModel::Decoherence(p) => decoherence_ptm(p.t1[0], p.t2[0], p.gate_time)?.tensor(&decoherence_ptm(
                p.t1[1],
                p.t2[1],
                p.gate_time,
            )?)?,
            NoiseModel::CrossTalk(p) => crosstalk_slot(p, slot)?.compose(&ideal_slot(slot).transpose())?,
            NoiseModel::CoherentZz { angle } => {
                let zz = crate::pauli::PauliLabel::parse("ZZ")?.matrix();
                let u = crate::gates::unitary_propagator(&zz, angle / 2.0);
                PauliTransferMatrix::from_unitary(&u)?
            }
            NoiseModel::Channel(r) => r.clone(),
            NoiseModel::Composite(parts) => {
                let mut acc = PauliTransferMatrix::identity(2);
                for m in parts {
                    acc = m.slot_error(slot)?.compose(&acc)?;
                }
                acc
            }
        })
    }

    /// Noisy PTM of one pulse slot.
    pub fn noisy_gate(&self, slot: Slot) -> Result<PauliTransferMatrix> {
        if let NoiseModel::CrossTalk(p) = self {
            return crosstalk_slot(p, slot);
        }
        self.slot_error(slot)?.compose(&ideal_slot(slot))
    }

    /// Error of a whole Clifford under [`Granularity::PerClifford`].
    /// `tables` holds the noisy slot PTMs of each cross-talk component in
    /// traversal order; `next` walks through them.
    fn clifford_error(
        &self,
        element: &CliffordElement,
        tables: &[SlotTable],
        next: &mut usize,
    ) -> Result<PauliTransferMatrix> {
        match self {
            NoiseModel::CrossTalk(_) => {
                let table = &tables[*next];
                *next += 1;
                let mut acc = PauliTransferMatrix::identity(2);
                for s in element.slots() {
                    acc = table.get(self, s)?.compose(&acc)?;
                }
                acc.compose(&lift(element)?.transpose())
            }
            NoiseModel::Composite(parts) => {
                let mut acc = PauliTransferMatrix::identity(2);
                for m in parts {
                    acc = m.clifford_error(element, tables, next)?.compose(&acc)?;
                }
                Ok(acc)
            }
            _ => self.slot_error([None, None]),
        }
    }
}

fn crosstalk_slot(p: &DeviceParams, slot: Slot) -> Result<PauliTransferMatrix> {
    let mut drives = Vec::with_capacity(2);
    for (g, q) in slot.iter().zip([Qubit::One, Qubit::Two]) {
        if let Some(g) = g {
            drives.push(DriveEnvelope::for_generator(q, *g, p));
        }
    }
    Ok(evolve_converged(p, &drives)?.0)
}

/// Two-qubit ideal PTM of a group element.
fn lift(element: &CliffordElement) -> Result<PauliTransferMatrix> {
    if element.ptm.num_qubits() == 2 {
        Ok(element.ptm.clone())
    } else {
        Err(Error::InvalidArgument("noise models act on two-qubit groups".into()))
    }
}

/// Read-only table of noisy slot PTMs for one model.
struct SlotTable(HashMap<Slot, PauliTransferMatrix>);

impl SlotTable {
    fn build(model: &NoiseModel, slots: &[Slot]) -> Result<Self> {
        let entries: Vec<(Slot, PauliTransferMatrix)> =
            slots.par_iter().map(|&s| Ok((s, model.noisy_gate(s)?))).collect::<Result<_>>()?;
        Ok(Self(entries.into_iter().collect()))
    }

    fn get(&self, model: &NoiseModel, slot: Slot) -> Result<PauliTransferMatrix> {
        match self.0.get(&slot) {
            Some(r) => Ok(r.clone()),
            None => model.noisy_gate(slot),
        }
    }
}

fn all_slots() -> Vec<Slot> {
    let options: Vec<Option<Generator>> = std::iter::once(None).chain(Generator::ALL.into_iter().map(Some)).collect();
    options.iter().flat_map(|&a| options.iter().map(move |&b| [a, b])).collect()
}

fn crosstalk_parts<'a>(model: &'a NoiseModel, out: &mut Vec<&'a NoiseModel>) {
    match model {
        NoiseModel::CrossTalk(_) => out.push(model),
        NoiseModel::Composite(parts) => parts.iter().for_each(|m| crosstalk_parts(m, out)),
        _ => {}
    }
}

/// Noisy PTMs of all 49 pulse slots for a model, built once and shared by
/// every group the model is evaluated on.
pub struct SlotChannels {
    granularity: Granularity,
    tables: Vec<SlotTable>,
}

impl SlotChannels {
    pub fn build(model: &NoiseModel, granularity: Granularity) -> Result<Self> {
        model.validate()?;
        let slots = all_slots();
        let tables = match granularity {
            Granularity::PerGenerator => vec![SlotTable::build(model, &slots)?],
            Granularity::PerClifford => {
                let mut parts = Vec::new();
                crosstalk_parts(model, &mut parts);
                parts.into_iter().map(|m| SlotTable::build(m, &slots)).collect::<Result<_>>()?
            }
        };
        Ok(Self { granularity, tables })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }
}

/// Noisy PTMs of every element of a two-qubit group, built once.
#[derive(Debug, Clone)]
pub struct NoisyGroup {
    kind: GroupKind,
    granularity: Granularity,
    noisy: Vec<PauliTransferMatrix>,
}

impl NoisyGroup {
    pub fn build(model: &NoiseModel, group: &CliffordGroup, granularity: Granularity) -> Result<Self> {
        Self::build_with(model, &SlotChannels::build(model, granularity)?, group)
    }

    /// Uses slot channels previously built from the same model.
    pub fn build_with(model: &NoiseModel, channels: &SlotChannels, group: &CliffordGroup) -> Result<Self> {
        if group.num_qubits() != 2 {
            return Err(Error::InvalidArgument("noise models act on two-qubit groups".into()));
        }
        let granularity = channels.granularity;
        let tables = &channels.tables;
        let noisy = group
            .elements()
            .par_iter()
            .map(|e| -> Result<PauliTransferMatrix> {
                match granularity {
                    Granularity::PerGenerator => {
                        let mut acc = PauliTransferMatrix::identity(2);
                        for s in e.slots() {
                            acc = tables[0].get(model, s)?.compose(&acc)?;
                        }
                        Ok(acc)
                    }
                    Granularity::PerClifford => model.clifford_error(e, tables, &mut 0)?.compose(&lift(e)?),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind: group.kind(), granularity, noisy })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.noisy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noisy.is_empty()
    }

    pub fn noisy(&self, index: usize) -> &PauliTransferMatrix {
        &self.noisy[index]
    }

    /// Group-averaged error `Λ̄ = mean_i noisy(i) · ideal(i)ᵀ`.
    pub fn average_error(&self, group: &CliffordGroup) -> Result<PauliTransferMatrix> {
        if group.kind() != self.kind || group.len() != self.len() {
            return Err(Error::InvalidArgument("group does not match the cached channels".into()));
        }
        let sum = group
            .elements()
            .par_iter()
            .zip(self.noisy.par_iter())
            .map(|(e, r)| r.matrix() * e.ptm.matrix().transpose())
            .reduce(|| nalgebra::DMatrix::zeros(16, 16), |a, b| a + b);
        PauliTransferMatrix::from_matrix(2, sum / self.len() as f64)
    }
}

/// Twirl of the group-averaged error over the group it was averaged on.
pub fn predict_alphas(model: &NoiseModel, kind: GroupKind, granularity: Granularity) -> Result<TwirlOutcome> {
    predict_alphas_with(model, &SlotChannels::build(model, granularity)?, kind)
}

pub fn predict_alphas_with(model: &NoiseModel, channels: &SlotChannels, kind: GroupKind) -> Result<TwirlOutcome> {
    let group = CliffordGroup::product_group(kind)?;
    let noisy = NoisyGroup::build_with(model, channels, &group)?;
    let avg = noisy.average_error(&group)?;
    match kind {
        GroupKind::CxC => twirl_cxc(&avg),
        GroupKind::CxI => twirl_subsystem(&avg, Qubit::One),
        GroupKind::IxC => twirl_subsystem(&avg, Qubit::Two),
        GroupKind::C1 => Err(Error::InvalidArgument("predictions need a two-qubit group".into())),
    }
}

/// Decay parameters of all three experiments predicted from a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrediction {
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub alpha_1_given_2: f64,
    pub alpha_2_given_1: f64,
    pub alpha_12: f64,
}

impl ModelPrediction {
    pub fn alphas(&self) -> Alphas {
        Alphas {
            alpha_1: Some(self.alpha_1),
            alpha_2: Some(self.alpha_2),
            alpha_1_given_2: Some(self.alpha_1_given_2),
            alpha_2_given_1: Some(self.alpha_2_given_1),
            alpha_12: Some(self.alpha_12),
            full: None,
        }
    }
}

pub fn predict_all(model: &NoiseModel, granularity: Granularity) -> Result<ModelPrediction> {
    let get = |o: &TwirlOutcome, f: fn(&Alphas) -> Option<f64>| {
        f(&o.alphas).ok_or_else(|| Error::InvalidArgument("twirl did not produce the requested parameter".into()))
    };
    let channels = SlotChannels::build(model, granularity)?;
    let e1 = predict_alphas_with(model, &channels, GroupKind::CxI)?;
    let e2 = predict_alphas_with(model, &channels, GroupKind::IxC)?;
    let e3 = predict_alphas_with(model, &channels, GroupKind::CxC)?;
    Ok(ModelPrediction {
        alpha_1: get(&e1, |a| a.alpha_1)?,
        alpha_2: get(&e2, |a| a.alpha_2)?,
        alpha_1_given_2: get(&e3, |a| a.alpha_1_given_2)?,
        alpha_2_given_1: get(&e3, |a| a.alpha_2_given_1)?,
        alpha_12: get(&e3, |a| a.alpha_12)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Generator::*;

    #[test]
    fn decoherence_closed_form() {
        let r = decoherence_ptm(9.7e-6, 10.3e-6, 20e-9).unwrap();
        assert!((r.get(1, 1) - (-20e-9f64 / 10.3e-6).exp()).abs() < 1e-15);
        assert!((r.get(1, 1) - 0.99806).abs() < 5e-6);
        assert!(r.is_trace_preserving(1e-15));
        assert!(r.is_completely_positive(1e-12));
        assert!(decoherence_ptm(9.7e-6, 10.3e-6, 0.0).unwrap().approx_eq(&PauliTransferMatrix::identity(1), 0.0));
        let inf = decoherence_ptm(1e-6, 1e-6, 1.0).unwrap();
        assert!((inf.get(3, 0) - 1.0).abs() < 1e-12 && inf.get(3, 3).abs() < 1e-12);
        assert!(decoherence_ptm(1e-6, 3e-6, 1e-9).is_err());
    }

    #[test]
    fn decoherence_semigroup() {
        let a = decoherence_ptm(9.7e-6, 10.3e-6, 13e-9).unwrap();
        let b = decoherence_ptm(9.7e-6, 10.3e-6, 29e-9).unwrap();
        let ab = decoherence_ptm(9.7e-6, 10.3e-6, 42e-9).unwrap();
        assert!(b.compose(&a).unwrap().approx_eq(&ab, 1e-12));
    }

    #[test]
    fn ideal_and_depolarizing_slots() {
        let r = NoiseModel::Ideal.noisy_gate([Some(X180), None]).unwrap();
        assert!(r.approx_eq(&X180.ptm().tensor(&PauliTransferMatrix::identity(1)).unwrap(), 1e-14));
        let dep = NoiseModel::Depolarizing { alpha1: 0.99, alpha2: 0.99 };
        let r = dep.noisy_gate([None, None]).unwrap();
        let d = PauliTransferMatrix::depolarizing(1, 0.99);
        assert!(r.approx_eq(&d.tensor(&d).unwrap(), 1e-14));
    }

    #[test]
    fn ideal_outputs_are_group_members() {
        let group = CliffordGroup::product_group(GroupKind::CxC).unwrap();
        let noisy = NoisyGroup::build(&NoiseModel::Ideal, &group, Granularity::PerGenerator).unwrap();
        for i in (0..group.len()).step_by(37) {
            assert_eq!(group.lookup(noisy.noisy(i)).unwrap(), i);
        }
    }

    #[test]
    fn per_clifford_depolarizing_prediction() {
        let dep = NoiseModel::Depolarizing { alpha1: 0.99, alpha2: 0.98 };
        let p = predict_all(&dep, Granularity::PerClifford).unwrap();
        assert!((p.alpha_1_given_2 - 0.99).abs() < 1e-12);
        assert!(((1.0 - p.alpha_1_given_2) / 2.0 - 0.005).abs() < 1e-12);
        assert!((p.alpha_2_given_1 - 0.98).abs() < 1e-12);
        assert!((p.alpha_12 - 0.99 * 0.98).abs() < 1e-12);
        assert!((p.alpha_1 - 0.99).abs() < 1e-12);
    }

    #[test]
    fn ideal_prediction_is_perfect() {
        let p = predict_all(&NoiseModel::Ideal, Granularity::PerGenerator).unwrap();
        for a in [p.alpha_1, p.alpha_2, p.alpha_1_given_2, p.alpha_2_given_1, p.alpha_12] {
            assert!((a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_order() {
        let zz = NoiseModel::CoherentZz { angle: 0.2 };
        let dep = NoiseModel::Depolarizing { alpha1: 0.9, alpha2: 0.8 };
        let m = NoiseModel::Composite(vec![zz.clone(), dep.clone()]);
        let s = [Some(XPlus90), Some(YMinus90)];
        let expect = dep.slot_error(s).unwrap().compose(&zz.slot_error(s).unwrap()).unwrap();
        assert!(m.slot_error(s).unwrap().approx_eq(&expect, 1e-14));
    }

    #[test]
    fn decoupled_crosstalk_is_ideal() {
        let mut p = DeviceParams::sample_a();
        p.set_couplings(Couplings::zero());
        let m = NoiseModel::CrossTalk(p);
        for s in [[Some(XPlus90), None], [Some(Y180), Some(XMinus90)], [None, Some(YPlus90)]] {
            assert!(m.noisy_gate(s).unwrap().approx_eq(&ideal_slot(s), 1e-8));
        }
    }

    #[test]
    fn crosstalk_error_is_small_and_physical() {
        let m = NoiseModel::CrossTalk(DeviceParams::sample_a());
        let lam = m.slot_error([Some(XPlus90), None]).unwrap();
        assert!(lam.is_trace_preserving(1e-9));
        let dev = lam.max_abs_diff(&PauliTransferMatrix::identity(2));
        assert!(dev > 1e-4 && dev < 0.2, "‖Λ − 1‖ = {dev}");
    }

    #[test]
    fn crosstalk_needs_couplings() {
        let m = NoiseModel::CrossTalk(DeviceParams::sample_b());
        assert!(matches!(m.validate(), Err(Error::MissingParams(_))));
    }
}
