//! The three benchmarking experiments: Cliffords on qubit 1 only, on qubit 2
//! only, and on both simultaneously.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::clifford::{CliffordGroup, GroupKind};
use crate::error::{Error, Result};
use crate::noise::{Granularity, NoiseModel, NoisyGroup, SlotChannels};
use crate::ptm::PauliVector;
use crate::twirl::{gamma_decay_curve, SubsystemTwirlBlocks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    /// Cliffords on qubit 1, qubit 2 idles.
    Exp1CxI,
    /// Cliffords on qubit 2, qubit 1 idles.
    Exp2IxC,
    /// Independent Cliffords on both qubits at once.
    Exp3CxC,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::Exp1CxI, Experiment::Exp2IxC, Experiment::Exp3CxC];

    pub fn group_kind(self) -> GroupKind {
        match self {
            Experiment::Exp1CxI => GroupKind::CxI,
            Experiment::Exp2IxC => GroupKind::IxC,
            Experiment::Exp3CxC => GroupKind::CxC,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1CxI => "exp1",
            Experiment::Exp2IxC => "exp2",
            Experiment::Exp3CxC => "exp3",
        }
    }

    pub fn projections(self) -> &'static [Projection] {
        match self {
            Experiment::Exp3CxC => &[Projection::Q1, Projection::Q2, Projection::Corr],
            _ => &[Projection::Q1, Projection::Q2],
        }
    }

    fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" | "1" | "cxi" => Ok(Experiment::Exp1CxI),
            "exp2" | "2" | "ixc" => Ok(Experiment::Exp2IxC),
            "exp3" | "3" | "cxc" => Ok(Experiment::Exp3CxC),
            _ => Err(Error::InvalidArgument(format!("unknown experiment {s:?}"))),
        }
    }
}

/// Populations summed into one survival probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Projection {
    /// `p₀₀ + p₀₁`: qubit 1 found in |0⟩.
    Q1,
    /// `p₀₀ + p₁₀`: qubit 2 found in |0⟩.
    Q2,
    /// `p₀₀ + p₁₁`: both qubits agree.
    Corr,
}

impl Projection {
    pub fn name(self) -> &'static str {
        match self {
            Projection::Q1 => "Q1",
            Projection::Q2 => "Q2",
            Projection::Corr => "CORR",
        }
    }

    /// Sum of the selected entries of `[p00, p01, p10, p11]`.
    pub fn survival(self, p: &[f64; 4]) -> f64 {
        match self {
            Projection::Q1 => p[0] + p[1],
            Projection::Q2 => p[0] + p[2],
            Projection::Corr => p[0] + p[3],
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "Q1" => Ok(Projection::Q1),
            "Q2" => Ok(Projection::Q2),
            "CORR" => Ok(Projection::Corr),
            _ => Err(Error::InvalidArgument(format!("unknown projection {s:?}"))),
        }
    }
}

/// State preparation and readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Spam {
    pub prep: PauliVector,
    /// `confusion[observed][true]`, columns sum to one.
    pub confusion: [[f64; 4]; 4],
}

impl Default for Spam {
    fn default() -> Self {
        Self::perfect()
    }
}

impl Spam {
    pub fn perfect() -> Self {
        let mut confusion = [[0.0; 4]; 4];
        for (i, row) in confusion.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { prep: PauliVector::basis_state(&[0, 0]).expect("two qubits"), confusion }
    }

    pub fn new(prep: PauliVector, confusion: [[f64; 4]; 4]) -> Result<Self> {
        if prep.num_qubits() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: prep.num_qubits() });
        }
        for col in 0..4 {
            let sum: f64 = (0..4).map(|r| confusion[r][col]).sum();
            if (sum - 1.0).abs() > 1e-9 || (0..4).any(|r| confusion[r][col] < 0.0) {
                return Err(Error::InvalidParams(format!("confusion column {col} is not a probability vector")));
            }
        }
        Ok(Self { prep, confusion })
    }

    /// Independent readout errors: `e0[q]` is P(read 1 | 0) and `e1[q]` is
    /// P(read 0 | 1) on qubit `q`.
    pub fn with_readout_errors(e0: [f64; 2], e1: [f64; 2]) -> Result<Self> {
        let single = |q: usize| [[1.0 - e0[q], e1[q]], [e0[q], 1.0 - e1[q]]];
        let (a, b) = (single(0), single(1));
        let mut c = [[0.0; 4]; 4];
        for (r, row) in c.iter_mut().enumerate() {
            for (t, v) in row.iter_mut().enumerate() {
                *v = a[r >> 1][t >> 1] * b[r & 1][t & 1];
            }
        }
        Self::new(PauliVector::basis_state(&[0, 0])?, c)
    }

    fn observe(&self, p: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|t| self.confusion[r][t] * p[t]).sum();
        }
        out
    }
}

/// Settings of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RBConfig {
    pub lengths: Vec<usize>,
    pub k: usize,
    pub experiment: Experiment,
    pub seed: u64,
    pub spam: Spam,
    pub granularity: Granularity,
    /// Shots per sequence; `None` uses exact populations.
    pub shots: Option<u64>,
    pub keep_raw: bool,
}

impl RBConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            lengths: default_lengths(),
            k: 50,
            experiment,
            seed: 0,
            spam: Spam::perfect(),
            granularity: Granularity::PerGenerator,
            shots: None,
            keep_raw: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::InvalidArgument("no sequence lengths given".into()));
        }
        if self.lengths[0] < 1 || self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("lengths must be strictly increasing and at least 1".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidArgument("K must be at least 2".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidArgument("shots must be positive".into()));
        }
        Ok(())
    }
}

/// `1, 2, 4, …, 512`.
pub fn default_lengths() -> Vec<usize> {
    (0..10).map(|e| 1usize << e).collect()
}

/// `count` distinct lengths spread geometrically over `[1, max]`.
pub fn geometric_lengths(max: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(count);
    for i in 0..count {
        let x = if count == 1 { 1.0 } else { (max as f64).powf(i as f64 / (count - 1) as f64) };
        let mut m = x.round().max(1.0) as usize;
        if let Some(&last) = out.last() {
            m = m.max(last + 1);
        }
        out.push(m);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub mean: f64,
    pub stderr: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub experiment: Experiment,
    pub projection: Projection,
    pub points: Vec<CurvePoint>,
    /// Per-sequence survivals, one list per point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<Vec<f64>>>,
}

impl SurvivalCurve {
    pub fn lengths(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.m).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stderr).collect()
    }
}

/// Mean and standard error (`sample std / √K`).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `m` uniform Cliffords and the element that undoes them.
pub fn generate_sequence<R: Rng + ?Sized>(group: &CliffordGroup, m: usize, rng: &mut R) -> Result<(Vec<usize>, usize)> {
    let seq = group.sample_uniform(rng, m)?;
    let recovery = group.recovery_gate(&seq);
    Ok((seq, recovery))
}

/// Final populations `[p00, p01, p10, p11]` after the noisy sequence and
/// its recovery, before readout errors.
pub fn sequence_populations(noisy: &NoisyGroup, indices: &[usize], recovery: usize, prep: &PauliVector) -> [f64; 4] {
    let mut x = prep.coefficients().clone();
    for &i in indices.iter().chain(std::iter::once(&recovery)) {
        x = noisy.noisy(i).matrix() * x;
    }
    let mut p = [0.0; 4];
    for (j, bits) in [[0u8, 0], [0, 1], [1, 0], [1, 1]].iter().enumerate() {
        let e = PauliVector::basis_projector(bits).expect("two qubits");
        p[j] = e.coefficients().dot(&x);
    }
    p
}

/// Observed populations `[p00, p01, p10, p11]` for one sequence.
pub fn simulate_sequence(noisy: &NoisyGroup, indices: &[usize], recovery: usize, spam: &Spam) -> [f64; 4] {
    spam.observe(sequence_populations(noisy, indices, recovery, &spam.prep))
}

/// Multinomial resampling of a population vector.
pub fn sample_shots<R: Rng + ?Sized>(p: &[f64; 4], shots: u64, rng: &mut R) -> Result<[f64; 4]> {
    let mut left = shots;
    let mut rest: f64 = p.iter().map(|v| v.max(0.0)).sum();
    let mut counts = [0u64; 4];
    for j in 0..4 {
        if j == 3 || left == 0 {
            counts[j] = left;
            left = 0;
            continue;
        }
        let q = (p[j].max(0.0) / rest.max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
        let c = Binomial::new(left, q).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng);
        counts[j] = c;
        left -= c;
        rest -= p[j].max(0.0);
    }
    Ok(counts.map(|c| c as f64 / shots as f64))
}

/// Seed of sequence `k` at length `m`, independent of evaluation order.
pub fn sequence_seed(seed: u64, experiment: Experiment, m: usize, k: usize) -> u64 {
    let mut z = seed;
    for part in [experiment.id(), m as u64, k as u64] {
        z = splitmix(z ^ splitmix(part));
    }
    z
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one experiment and returns its survival curves.
pub fn run_experiment(cfg: &RBConfig, model: &NoiseModel) -> Result<Vec<SurvivalCurve>> {
    run_experiment_with(cfg, model, &SlotChannels::build(model, cfg.granularity)?)
}

/// As [`run_experiment`], reusing slot channels built for `cfg.granularity`.
pub fn run_experiment_with(cfg: &RBConfig, model: &NoiseModel, channels: &SlotChannels) -> Result<Vec<SurvivalCurve>> {
    cfg.validate()?;
    if channels.granularity() != cfg.granularity {
        return Err(Error::InvalidArgument("slot channels were built for another granularity".into()));
    }
    let group = CliffordGroup::product_group(cfg.experiment.group_kind())?;
    let noisy = NoisyGroup::build_with(model, channels, &group)?;
    let jobs: Vec<(usize, usize)> = cfg.lengths.iter().flat_map(|&m| (0..cfg.k).map(move |k| (m, k))).collect();
    let results: Vec<[f64; 4]> = jobs
        .par_iter()
        .map(|&(m, k)| -> Result<[f64; 4]> {
            let mut rng = ChaCha8Rng::seed_from_u64(sequence_seed(cfg.seed, cfg.experiment, m, k));
            let (seq, rec) = generate_sequence(&group, m, &mut rng)?;
            let p = simulate_sequence(&noisy, &seq, rec, &cfg.spam);
            match cfg.shots {
                Some(n) => sample_shots(&p, n, &mut rng),
                None => Ok(p),
            }
        })
        .collect::<Result<_>>()?;
    let curves = cfg
        .experiment
        .projections()
        .iter()
        .map(|&proj| {
            let mut points = Vec::with_capacity(cfg.lengths.len());
            let mut raw = Vec::with_capacity(cfg.lengths.len());
            for (i, &m) in cfg.lengths.iter().enumerate() {
                let values: Vec<f64> =
                    results[i * cfg.k..(i + 1) * cfg.k].iter().map(|p| proj.survival(p).clamp(0.0, 1.0)).collect();
                let (mean, stderr) = mean_and_stderr(&values);
                points.push(CurvePoint { m, mean, stderr, k: cfg.k });
                raw.push(values);
            }
            SurvivalCurve { experiment: cfg.experiment, projection: proj, points, raw: cfg.keep_raw.then_some(raw) }
        })
        .collect();
    Ok(curves)
}

/// Runs all three experiments with `base` settings, building the slot
/// channels once.
pub fn run_all_experiments(base: &RBConfig, model: &NoiseModel) -> Result<Vec<SurvivalCurve>> {
    let channels = SlotChannels::build(model, base.granularity)?;
    let mut out = Vec::new();
    for e in Experiment::ALL {
        let cfg = RBConfig { experiment: e, ..base.clone() };
        out.extend(run_experiment_with(&cfg, model, &channels)?);
    }
    Ok(out)
}

/// Forward models for the sequence fidelity.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayModel {
    /// `A αᵐ + B`.
    Single { a: f64, alpha: f64, b: f64 },
    /// `A₁ α₁ᵐ + A₂ α₂ᵐ + A₁₂ α₁₂ᵐ + B`.
    Triple { a: [f64; 3], alpha: [f64; 3], b: f64 },
    /// `A (Γᵐ)₀₀ + B`.
    Gamma { a: f64, blocks: SubsystemTwirlBlocks, b: f64 },
}

pub fn theoretical_decay(model: &DecayModel, m: usize) -> Result<f64> {
    Ok(match model {
        DecayModel::Single { a, alpha, b } => a * alpha.powi(m as i32) + b,
        DecayModel::Triple { a, alpha, b } => (0..3).map(|i| a[i] * alpha[i].powi(m as i32)).sum::<f64>() + b,
        DecayModel::Gamma { a, blocks, b } => a * gamma_decay_curve(blocks, &[m])?[0] + b,
    })
}

/// CSV rendering with columns `experiment,projection,m,mean,stderr,K`.
pub fn curves_to_csv(curves: &[SurvivalCurve]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["experiment", "projection", "m", "mean", "stderr", "K"]).map_err(csv_err)?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.experiment.name().to_string(),
                c.projection.name().to_string(),
                p.m.to_string(),
                p.mean.to_string(),
                p.stderr.to_string(),
                p.k.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv { line: 0, message: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| Error::Csv { line: 0, message: e.to_string() })
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Csv { line, message: e.to_string() }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    experiment: String,
    projection: String,
    m: usize,
    mean: f64,
    stderr: f64,
    #[serde(rename = "K")]
    k: usize,
}

/// Parses curves written by [`curves_to_csv`] or produced elsewhere in the
/// same layout. Rows are grouped by (experiment, projection) in order of
/// first appearance.
pub fn curves_from_csv(text: &str) -> Result<Vec<SurvivalCurve>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut curves: Vec<SurvivalCurve> = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Csv { line, message: e.to_string() })?;
        let bad = |message: String| Error::Csv { line, message };
        let experiment: Experiment = row.experiment.parse().map_err(|e: Error| bad(e.to_string()))?;
        let projection: Projection = row.projection.parse().map_err(|e: Error| bad(e.to_string()))?;
        if !(row.mean.is_finite() && row.stderr.is_finite()) || row.stderr < 0.0 {
            return Err(bad("mean and stderr must be finite with stderr ≥ 0".into()));
        }
        let point = CurvePoint { m: row.m, mean: row.mean, stderr: row.stderr, k: row.k };
        match curves.iter_mut().find(|c| c.experiment == experiment && c.projection == projection) {
            Some(c) => {
                if c.points.last().is_some_and(|p| p.m >= row.m) {
                    return Err(bad(format!("lengths of {experiment}/{projection} are not increasing")));
                }
                c.points.push(point)
            }
            None => curves.push(SurvivalCurve { experiment, projection, points: vec![point], raw: None }),
        }
    }
    if curves.is_empty() {
        return Err(Error::Csv { line: 1, message: "no data rows".into() });
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptm::PauliTransferMatrix;

    #[test]
    fn sequences_compose_to_identity() {
        let group = CliffordGroup::product_group(GroupKind::CxC).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 0..100 {
            let (seq, rec) = generate_sequence(&group, 1 + t % 17, &mut rng).unwrap();
            let mut acc = PauliTransferMatrix::identity(2);
            for &i in seq.iter().chain(std::iter::once(&rec)) {
                acc = group.element(i).ptm.compose(&acc).unwrap();
            }
            assert!(acc.approx_eq(&PauliTransferMatrix::identity(2), 1e-12));
        }
        let (seq, rec) = generate_sequence(&group, 1, &mut rng).unwrap();
        assert_eq!(rec, group.inverse(seq[0]));
        let a = generate_sequence(&group, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_sequence(&group, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ideal_model_survives() {
        let mut cfg = RBConfig::new(Experiment::Exp3CxC);
        cfg.lengths = vec![1, 5, 20];
        cfg.k = 4;
        for c in run_experiment(&cfg, &NoiseModel::Ideal).unwrap() {
            for p in &c.points {
                assert!((p.mean - 1.0).abs() < 1e-12 && p.stderr < 1e-12);
            }
        }
    }

    #[test]
    fn fully_depolarizing_gives_uniform_populations() {
        let group = CliffordGroup::product_group(GroupKind::CxC).unwrap();
        let model = NoiseModel::JointDepolarizing { alpha: 0.0 };
        let noisy = NoisyGroup::build(&model, &group, Granularity::PerClifford).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (seq, rec) = generate_sequence(&group, 3, &mut rng).unwrap();
        for p in simulate_sequence(&noisy, &seq, rec, &Spam::perfect()) {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn per_generator_depolarizing_counts_slots() {
        let alpha: f64 = 0.97;
        let group = CliffordGroup::product_group(GroupKind::CxC).unwrap();
        let model = NoiseModel::Depolarizing { alpha1: alpha, alpha2: alpha };
        let noisy = NoisyGroup::build(&model, &group, Granularity::PerGenerator).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [1, 4, 9] {
            let (seq, rec) = generate_sequence(&group, m, &mut rng).unwrap();
            let w: usize = seq.iter().chain(std::iter::once(&rec)).map(|&i| group.element(i).pulse_count()).sum();
            let p = simulate_sequence(&noisy, &seq, rec, &Spam::perfect());
            assert!((Projection::Q1.survival(&p) - (1.0 + alpha.powi(w as i32)) / 2.0).abs() < 1e-12);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn curves_are_reproducible() {
        let mut cfg = RBConfig::new(Experiment::Exp1CxI);
        cfg.lengths = vec![1, 3, 10];
        cfg.k = 6;
        cfg.seed = 42;
        cfg.shots = Some(200);
        let model = NoiseModel::Depolarizing { alpha1: 0.98, alpha2: 0.99 };
        let a = run_experiment(&cfg, &model).unwrap();
        let b = run_experiment(&cfg, &model).unwrap();
        assert_eq!(curves_to_csv(&a).unwrap(), curves_to_csv(&b).unwrap());
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn config_validation() {
        let mut cfg = RBConfig::new(Experiment::Exp1CxI);
        cfg.lengths = vec![1, 1];
        assert!(cfg.validate().is_err());
        cfg.lengths = vec![0, 2];
        assert!(cfg.validate().is_err());
        cfg.lengths = vec![1, 2];
        cfg.k = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn perfect_spam_p00_coefficients() {
        // |00⟩⟨00| = (II + ZI + IZ + ZZ)/4 and each Z string decays with its own α.
        let (a1, a2, a12) = (0.99f64, 0.98f64, 0.975f64);
        let r = PauliTransferMatrix::from_diagonal(
            2,
            &(0..16)
                .map(|i| match (i >> 2, i & 3) {
                    (0, 0) => 1.0,
                    (_, 0) => a1,
                    (0, _) => a2,
                    _ => a12,
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let x = PauliVector::basis_state(&[0, 0]).unwrap();
        let e = PauliVector::basis_projector(&[0, 0]).unwrap();
        let model = DecayModel::Triple { a: [0.25; 3], alpha: [a1, a2, a12], b: 0.25 };
        let mut acc = PauliTransferMatrix::identity(2);
        for m in 0..6 {
            let p = crate::ptm::expectation(&e, &acc, &x).unwrap();
            assert!((p - theoretical_decay(&model, m).unwrap()).abs() < 1e-14);
            acc = r.compose(&acc).unwrap();
        }
        let two = DecayModel::Triple { a: [0.3, 0.2, 0.0], alpha: [0.9, 0.8, 0.5], b: 0.5 };
        assert!((theoretical_decay(&two, 3).unwrap() - (0.3 * 0.729 + 0.2 * 0.512 + 0.5)).abs() < 1e-14);
        let flat = DecayModel::Single { a: 0.5, alpha: 1.0, b: 0.5 };
        assert_eq!(theoretical_decay(&flat, 77).unwrap(), 1.0);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let mut cfg = RBConfig::new(Experiment::Exp3CxC);
        cfg.lengths = vec![1, 2, 8];
        cfg.k = 3;
        let curves = run_experiment(&cfg, &NoiseModel::Depolarizing { alpha1: 0.95, alpha2: 0.9 }).unwrap();
        let text = curves_to_csv(&curves).unwrap();
        assert!(text.starts_with("experiment,projection,m,mean,stderr,K\n"));
        let back = curves_from_csv(&text).unwrap();
        assert_eq!(back, curves);
        let err = curves_from_csv("experiment,projection,m,mean,stderr,K\nexp1,Q1,1,0.9,x,5\n").unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }));
        assert!(curves_from_csv("experiment,projection,m,mean,stderr,K\nexp1,Q3,1,0.9,0.1,5\n").is_err());
    }

    #[test]
    fn readout_confusion_is_stochastic() {
        let s = Spam::with_readout_errors([0.02, 0.03], [0.05, 0.04]).unwrap();
        let p = s.observe([1.0, 0.0, 0.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 0.98 * 0.97).abs() < 1e-12);
    }

    #[test]
    fn geometric_grid() {
        let l = geometric_lengths(300, 32);
        assert_eq!(l.len(), 32);
        assert_eq!(l[0], 1);
        assert_eq!(*l.last().unwrap(), 300);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
    }
}
