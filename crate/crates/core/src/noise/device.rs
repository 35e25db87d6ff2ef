//! Device parameters and their key-value configuration format.
//!
//! Keys and units:
//!
//! | key | unit | meaning |
//! |---|---|---|
//! | `omega1`, `omega2` | GHz | qubit transition frequencies `ω/2π` |
//! | `t1_1`, `t1_2` | µs | relaxation times |
//! | `t2_1`, `t2_2` | µs | dephasing times |
//! | `zeta` | MHz | ZZ shift `ζ/2π` |
//! | `delta` | MHz | optional override of the detuning `(ω₁ − ω₂)/2π` |
//! | `m12`, `m21`, `mu1`, `mu2`, `nu1`, `nu2` | – | cross-talk couplings |
//! | `gate_time` | ns | duration of one generator pulse |
//! | `edge_fraction` | – | Gaussian rise/fall time as a fraction of `gate_time` |
//! | `calibration` | – | `ground` (default) or `bare` |
//! | `steps` | – | initial number of integration steps per pulse |

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const GHZ: f64 = 2.0 * PI * 1e9;
const MHZ: f64 = 2.0 * PI * 1e6;
const US: f64 = 1e-6;
const NS: f64 = 1e-9;

/// How pulses and rotating frames are calibrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Calibration {
    /// Frame frequencies and pulse amplitudes are tuned with the partner
    /// qubit in its ground state, as single-qubit Ramsey and Rabi
    /// calibrations would do.
    Ground,
    /// Frames at the bare frequencies and amplitudes tuned to the bare
    /// `XI`/`IX` terms.
    Bare,
}

/// Physical parameters of a qubit pair. Internal units are rad/s and s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub omega1: f64,
    pub omega2: f64,
    pub t1: [f64; 2],
    pub t2: [f64; 2],
    pub delta_override: Option<f64>,
    pub zeta: Option<f64>,
    pub m12: Option<f64>,
    pub m21: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub nu1: Option<f64>,
    pub nu2: Option<f64>,
    pub gate_time: f64,
    pub edge_fraction: f64,
    pub calibration: Calibration,
    pub initial_steps: usize,
}

/// The complete set of Hamiltonian couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub zeta: f64,
    pub m12: f64,
    pub m21: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl Couplings {
    pub fn zero() -> Self {
        Self { zeta: 0.0, m12: 0.0, m21: 0.0, mu1: 0.0, mu2: 0.0, nu1: 0.0, nu2: 0.0 }
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            omega1: 5.0 * GHZ,
            omega2: 5.1 * GHZ,
            t1: [10.0 * US; 2],
            t2: [10.0 * US; 2],
            delta_override: None,
            zeta: None,
            m12: None,
            m21: None,
            mu1: None,
            mu2: None,
            nu1: None,
            nu2: None,
            gate_time: 20.0 * NS,
            edge_fraction: 0.25,
            calibration: Calibration::Ground,
            initial_steps: 64,
        }
    }
}

impl DeviceParams {
    /// Sample a: frequencies, coherence times and the measured cross-talk couplings.
    pub fn sample_a() -> Self {
        Self {
            omega1: 4.9895 * GHZ,
            omega2: 5.0554 * GHZ,
            t1: [9.7 * US, 8.2 * US],
            t2: [10.3 * US, 7.1 * US],
            zeta: Some(1.1 * MHZ),
            m12: Some(0.19),
            m21: Some(0.32),
            mu1: Some(-0.088),
            mu2: Some(-0.16),
            nu1: Some(-0.025),
            nu2: Some(-0.048),
            ..Default::default()
        }
    }

    /// Sample b: only frequencies and coherence times are known.
    pub fn sample_b() -> Self {
        Self {
            omega1: 4.7610 * GHZ,
            omega2: 5.3401 * GHZ,
            t1: [9.4 * US, 9.9 * US],
            t2: [7.3 * US, 10.2 * US],
            ..Default::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "sample_a" => Ok(Self::sample_a()),
            "sample_b" => Ok(Self::sample_b()),
            other => Err(Error::InvalidArgument(format!("unknown device preset {other:?}"))),
        }
    }

    /// Detuning `ω₁ − ω₂` in rad/s.
    pub fn delta(&self) -> f64 {
        self.delta_override.unwrap_or(self.omega1 - self.omega2)
    }

    /// All couplings, or the names of the missing ones.
    pub fn couplings(&self) -> Result<Couplings> {
        let fields = [
            ("zeta", self.zeta),
            ("m12", self.m12),
            ("m21", self.m21),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
        ];
        let missing: Vec<String> = fields.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| k.to_string()).collect();
        if !missing.is_empty() {
            return Err(Error::MissingParams(missing));
        }
        let v = |i: usize| fields[i].1.expect("checked");
        Ok(Couplings { zeta: v(0), m12: v(1), m21: v(2), mu1: v(3), mu2: v(4), nu1: v(5), nu2: v(6) })
    }

    pub fn set_couplings(&mut self, c: Couplings) {
        self.zeta = Some(c.zeta);
        self.m12 = Some(c.m12);
        self.m21 = Some(c.m21);
        self.mu1 = Some(c.mu1);
        self.mu2 = Some(c.mu2);
        self.nu1 = Some(c.nu1);
        self.nu2 = Some(c.nu2);
    }

    pub fn validate(&self) -> Result<()> {
        for q in 0..2 {
            if !(self.t1[q] > 0.0 && self.t2[q] > 0.0) {
                return Err(Error::InvalidParams(format!("coherence times of qubit {} must be positive", q + 1)));
            }
            if self.t2[q] > 2.0 * self.t1[q] * (1.0 + 1e-12) {
                return Err(Error::InvalidParams(format!("qubit {}: T2 exceeds 2·T1", q + 1)));
            }
        }
        if !(self.gate_time >= 0.0) || !self.gate_time.is_finite() {
            return Err(Error::InvalidParams("gate_time must be non-negative".into()));
        }
        if !(0.0..=0.5).contains(&self.edge_fraction) {
            return Err(Error::InvalidParams("edge_fraction must lie in [0, 0.5]".into()));
        }
        if self.initial_steps < 16 {
            return Err(Error::InvalidParams("at least 16 integration steps per pulse are required".into()));
        }
        for (name, v) in [
            ("m12", self.m12),
            ("m21", self.m21),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v.abs() >= 1.0 {
                    return Err(Error::InvalidParams(format!("{name} = {v} outside (−1, 1)")));
                }
            }
        }
        if let Some(z) = self.zeta {
            if !z.is_finite() {
                return Err(Error::InvalidParams("zeta must be finite".into()));
            }
        }
        Ok(())
    }

    /// Applies one configuration key. Returns `Ok(false)` when the key is not
    /// a device key, so callers can layer their own keys on top.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let num = || -> Result<f64> {
            value.parse::<f64>().map_err(|_| Error::InvalidParams(format!("{key}: cannot parse {value:?} as a number")))
        };
        match key {
            "omega1" => self.omega1 = num()? * GHZ,
            "omega2" => self.omega2 = num()? * GHZ,
            "t1_1" => self.t1[0] = num()? * US,
            "t1_2" => self.t1[1] = num()? * US,
            "t2_1" => self.t2[0] = num()? * US,
            "t2_2" => self.t2[1] = num()? * US,
            "delta" => self.delta_override = Some(num()? * MHZ),
            "zeta" => self.zeta = Some(num()? * MHZ),
            "m12" => self.m12 = Some(num()?),
            "m21" => self.m21 = Some(num()?),
            "mu1" => self.mu1 = Some(num()?),
            "mu2" => self.mu2 = Some(num()?),
            "nu1" => self.nu1 = Some(num()?),
            "nu2" => self.nu2 = Some(num()?),
            "gate_time" => self.gate_time = num()? * NS,
            "edge_fraction" => self.edge_fraction = num()?,
            "steps" => {
                self.initial_steps =
                    value.parse().map_err(|_| Error::InvalidParams(format!("steps: cannot parse {value:?}")))?
            }
            "calibration" => {
                self.calibration = match value {
                    "ground" => Calibration::Ground,
                    "bare" => Calibration::Bare,
                    other => return Err(Error::InvalidParams(format!("unknown calibration {other:?}"))),
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses a device-only configuration (unknown keys are errors).
    pub fn from_config(text: &str, base: DeviceParams) -> Result<Self> {
        let mut p = base;
        for entry in parse_key_values(text)? {
            if !p
                .set(&entry.key, &entry.value)
                .map_err(|e| Error::Config { line: entry.line, message: e.to_string() })?
            {
                return Err(Error::Config { line: entry.line, message: format!("unknown key {:?}", entry.key) });
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Key-value rendering in configuration units.
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("omega1", format!("{}", self.omega1 / GHZ));
        line("omega2", format!("{}", self.omega2 / GHZ));
        line("t1_1", format!("{}", self.t1[0] / US));
        line("t1_2", format!("{}", self.t1[1] / US));
        line("t2_1", format!("{}", self.t2[0] / US));
        line("t2_2", format!("{}", self.t2[1] / US));
        if let Some(d) = self.delta_override {
            line("delta", format!("{}", d / MHZ));
        }
        if let Some(z) = self.zeta {
            line("zeta", format!("{}", z / MHZ));
        }
        for (k, v) in [
            ("m12", self.m12),
            ("m21", self.m21),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
        ] {
            if let Some(v) = v {
                line(k, format!("{v}"));
            }
        }
        line("gate_time", format!("{}", self.gate_time / NS));
        line("edge_fraction", format!("{}", self.edge_fraction));
        line(
            "calibration",
            match self.calibration {
                Calibration::Ground => "ground".into(),
                Calibration::Bare => "bare".into(),
            },
        );
        line("steps", format!("{}", self.initial_steps));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyValue {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses `key = value` lines; `#` and `;` start comments, blank lines and
/// `[section]` headers are ignored.
pub fn parse_key_values(text: &str) -> Result<Vec<KeyValue>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config { line: i + 1, message: format!("expected key = value, got {line:?}") })?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::Config { line: i + 1, message: "empty key".into() });
        }
        out.push(KeyValue { line: i + 1, key: key.to_string(), value: v.trim().to_string() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_a_values() {
        let p = DeviceParams::sample_a();
        p.validate().unwrap();
        assert!((p.delta() / MHZ - (-65.9)).abs() < 1e-9);
        let c = p.couplings().unwrap();
        assert_eq!((c.m12, c.m21, c.mu1, c.mu2, c.nu1, c.nu2), (0.19, 0.32, -0.088, -0.16, -0.025, -0.048));
        assert!((c.zeta / MHZ - 1.1).abs() < 1e-12);
    }

    #[test]
    fn sample_b_lacks_couplings() {
        let p = DeviceParams::sample_b();
        p.validate().unwrap();
        assert!((p.delta() / MHZ - (-579.1)).abs() < 1e-9);
        match p.couplings() {
            Err(Error::MissingParams(names)) => assert_eq!(names, ["zeta", "m12", "m21", "mu1", "mu2", "nu1", "nu2"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_round_trip() {
        let p = DeviceParams::sample_a();
        let q = DeviceParams::from_config(&p.to_config(), DeviceParams::default()).unwrap();
        assert!((p.omega1 - q.omega1).abs() < 1e-3);
        assert!((p.gate_time - q.gate_time).abs() < 1e-20);
        assert_eq!(p.couplings().unwrap().mu2, q.couplings().unwrap().mu2);
    }

    #[test]
    fn config_errors_name_the_line() {
        let err = DeviceParams::from_config("omega1 = 5\nbogus = 1\n", DeviceParams::default()).unwrap_err();
        assert_eq!(err, Error::Config { line: 2, message: "unknown key \"bogus\"".into() });
        let err = DeviceParams::from_config("# comment\nt1_1 = abc", DeviceParams::default()).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        assert!(DeviceParams::from_config("t2_1 = 30", DeviceParams::default()).is_err());
    }

    #[test]
    fn validation_bounds() {
        let mut p = DeviceParams::sample_a();
        p.mu1 = Some(1.5);
        assert!(p.validate().is_err());
        let mut p = DeviceParams::sample_a();
        p.t1[0] = 0.0;
        assert!(p.validate().is_err());
    }
}
