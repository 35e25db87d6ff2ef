//! Self-checks behind `srb verify`: analytic twirls against group averages,
//! group axioms, the correlation witness on product channels and fit
//! interval calibration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srb_core::clifford::{two_qubit_clifford_ptms, CliffordGroup, GroupKind};
use srb_core::fit::coverage_study;
use srb_core::ptm::PauliTransferMatrix;
use srb_core::random::random_channel;
use srb_core::rb::{generate_sequence, geometric_lengths};
use srb_core::twirl::*;

use crate::CliError;

/// Acceptable coverage of nominal 68% intervals over the calibration runs.
pub const COVERAGE_BAND: (f64, f64) = (0.58, 0.78);
const RECOVERY_TOL: f64 = 1e-12;
const WITNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(CliError::Usage(format!("unknown verification level {other:?} (quick, full)"))),
        }
    }

    fn channels(self) -> usize {
        match self {
            Level::Quick => 5,
            Level::Full => 50,
        }
    }

    fn sequences(self) -> usize {
        match self {
            Level::Quick => 100,
            Level::Full => 1000,
        }
    }

    fn coverage_repetitions(self) -> usize {
        match self {
            Level::Quick => 100,
            Level::Full => 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn err(e: srb_core::Error) -> CliError {
    CliError::Analysis(e.to_string())
}

fn max_diff(pairs: impl IntoIterator<Item = (PauliTransferMatrix, PauliTransferMatrix)>) -> f64 {
    pairs.into_iter().map(|(a, b)| a.max_abs_diff(&b)).fold(0.0, f64::max)
}

/// Largest entrywise gap between each analytic twirl and its brute-force
/// group average, over `count` random channels per qubit number.
pub fn twirl_oracle_gaps(count: usize, seed: u64) -> Result<Vec<(&'static str, f64)>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c1 = CliffordGroup::generate_c1().map_err(err)?;
    let c2 = two_qubit_clifford_ptms().map_err(err)?;
    let cxc = CliffordGroup::product_from(&c1, GroupKind::CxC).map_err(err)?;
    let cxi = CliffordGroup::product_from(&c1, GroupKind::CxI).map_err(err)?;
    let ixc = CliffordGroup::product_from(&c1, GroupKind::IxC).map_err(err)?;
    let mut gaps = vec![
        ("clifford n=1", 0.0f64),
        ("pauli n=1", 0.0),
        ("clifford n=2", 0.0),
        ("cxc", 0.0),
        ("cxi", 0.0),
        ("ixc", 0.0),
        ("pauli n=2", 0.0),
    ];
    for t in 0..count {
        let rank = 1 + t % 4;
        let r = random_channel(1, rank, &mut rng).map_err(err)?;
        gaps[0].1 = gaps[0]
            .1
            .max(max_diff([(twirl_full_clifford(&r).map_err(err)?.twirled, brute_force_twirl(&r, &c1).map_err(err)?)]));
        gaps[1].1 = gaps[1].1.max(max_diff([(pauli_twirl(&r), brute_force_pauli_twirl(&r).map_err(err)?)]));

        let r = random_channel(2, rank, &mut rng).map_err(err)?;
        let full = brute_force_twirl_over(&r, c2.iter()).map_err(err)?;
        gaps[2].1 = gaps[2].1.max(max_diff([(twirl_full_clifford(&r).map_err(err)?.twirled, full)]));
        gaps[3].1 =
            gaps[3].1.max(max_diff([(twirl_cxc(&r).map_err(err)?.twirled, brute_force_twirl(&r, &cxc).map_err(err)?)]));
        gaps[4].1 = gaps[4].1.max(max_diff([(
            twirl_subsystem(&r, Qubit::One).map_err(err)?.twirled,
            brute_force_twirl(&r, &cxi).map_err(err)?,
        )]));
        gaps[5].1 = gaps[5].1.max(max_diff([(
            twirl_subsystem(&r, Qubit::Two).map_err(err)?.twirled,
            brute_force_twirl(&r, &ixc).map_err(err)?,
        )]));
        gaps[6].1 = gaps[6].1.max(max_diff([(pauli_twirl(&r), brute_force_pauli_twirl(&r).map_err(err)?)]));
    }
    Ok(gaps)
}

/// Group orders and the inverse table.
pub fn group_checks() -> Result<Vec<CheckResult>, CliError> {
    let c1 = CliffordGroup::generate_c1().map_err(err)?;
    let mut out = Vec::new();
    for (kind, expected) in [(GroupKind::C1, 24), (GroupKind::CxC, 576), (GroupKind::CxI, 24), (GroupKind::IxC, 24)] {
        let g = CliffordGroup::product_from(&c1, kind).map_err(err)?;
        let inverses_ok = (0..g.len()).all(|a| g.multiply(a, g.inverse(a)) == 0 && g.inverse(g.inverse(a)) == a);
        let identity_ok = g.element(0).ptm == PauliTransferMatrix::identity(g.num_qubits());
        out.push(CheckResult::new(
            &format!("group {kind}"),
            g.len() == expected && inverses_ok && identity_ok,
            format!("order {} (expected {expected}), inverses {}", g.len(), if inverses_ok { "ok" } else { "broken" }),
        ));
    }
    let n2 = two_qubit_clifford_ptms().map_err(err)?.len();
    out.push(CheckResult::new("group C2", n2 == 11520, format!("order {n2} (expected 11520)")));
    Ok(out)
}

/// Largest deviation from the identity of a sequence followed by its
/// recovery, over `count` random sequences with lengths up to 100.
pub fn recovery_gap(count: usize, seed: u64) -> Result<f64, CliError> {
    let group = CliffordGroup::product_group(GroupKind::CxC).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = PauliTransferMatrix::identity(2);
    let mut worst = 0.0f64;
    for t in 0..count {
        let (seq, rec) = generate_sequence(&group, 1 + t % 100, &mut rng).map_err(err)?;
        let mut acc = id.clone();
        for &i in seq.iter().chain(std::iter::once(&rec)) {
            acc = group.element(i).ptm.compose(&acc).map_err(err)?;
        }
        worst = worst.max(acc.max_abs_diff(&id));
    }
    Ok(worst)
}

/// Largest `|δα|` over `count` random product channels.
pub fn product_witness_gap(count: usize, seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for t in 0..count {
        let a = random_channel(1, 1 + t % 4, &mut rng).map_err(err)?;
        let b = random_channel(1, 1 + (t + 1) % 4, &mut rng).map_err(err)?;
        let alphas = twirl_cxc(&a.tensor(&b).map_err(err)?).map_err(err)?.alphas;
        worst = worst.max(alphas.delta_alpha().unwrap_or(f64::INFINITY).abs());
    }
    Ok(worst)
}

/// Runs every check and returns the results in order.
pub fn checks(level: Level, tolerance: f64) -> Result<Vec<CheckResult>, CliError> {
    let mut out = Vec::new();
    for (name, gap) in twirl_oracle_gaps(level.channels(), 101)? {
        out.push(CheckResult::new(
            &format!("twirl {name}"),
            gap <= tolerance,
            format!("max deviation {gap:.3e} over {} channels (tolerance {tolerance:.1e})", level.channels()),
        ));
    }
    out.extend(group_checks()?);
    let gap = recovery_gap(level.sequences(), 102)?;
    out.push(CheckResult::new(
        "recovery",
        gap <= RECOVERY_TOL.min(tolerance),
        format!("max deviation {gap:.3e} over {} sequences", level.sequences()),
    ));
    let gap = product_witness_gap(level.channels(), 103)?;
    out.push(CheckResult::new(
        "product witness",
        gap <= WITNESS_TOL.min(tolerance),
        format!("max |dalpha| {gap:.3e} over {} product channels", level.channels()),
    ));
    let lengths = geometric_lengths(512, 32);
    for (i, r) in [0.0039, 0.0120].into_iter().enumerate() {
        let truth = [0.5, 1.0 - 2.0 * r, 0.5];
        let c =
            coverage_study(truth, 0.005, &lengths, level.coverage_repetitions(), 0.68, 104 + i as u64).map_err(err)?;
        let f = c.fraction();
        out.push(CheckResult::new(
            &format!("coverage r={r}"),
            (COVERAGE_BAND.0..=COVERAGE_BAND.1).contains(&f) && c.failed_fits == 0,
            format!("{:.1}% of {} intervals cover the truth ({} failed fits)", 100.0 * f, c.repetitions, c.failed_fits),
        ));
    }
    let r = PauliTransferMatrix::depolarizing(1, 0.97).tensor(&PauliTransferMatrix::identity(1)).map_err(err)?;
    let blocks = twirl_cxi(&r, Qubit::One).map_err(err)?;
    let gamma_gap = (&blocks.gamma - nalgebra::DMatrix::identity(4, 4) * 0.97).abs().max();
    out.push(CheckResult::new(
        "gamma block",
        gamma_gap <= tolerance,
        format!("deviation {gamma_gap:.3e} from 0.97 * 1"),
    ));
    Ok(out)
}

pub fn run(level: &str, tolerance: f64) -> Result<(), CliError> {
    let level = Level::parse(level)?;
    if !(tolerance >= 0.0) {
        return Err(CliError::Usage(format!("tolerance must be non-negative, got {tolerance}")));
    }
    let results = checks(level, tolerance)?;
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} check(s) failed")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_level_passes() {
        let results = checks(Level::Quick, 1e-10).unwrap();
        assert!(results.iter().all(|r| r.passed), "{:?}", results.iter().filter(|r| !r.passed).collect::<Vec<_>>());
    }

    #[test]
    fn tightened_tolerance_is_detected() {
        let results = checks(Level::Quick, 1e-16).unwrap();
        assert!(results.iter().any(|r| !r.passed));
    }
}
