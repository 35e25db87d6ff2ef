//! Run configuration: presets, the flat `key = value` file format and
//! command-line overrides, resolved into a [`RunConfig`].

use std::fmt::Write as _;
use std::str::FromStr;

use srb_core::clifford::{CliffordGroup, GroupKind};
use srb_core::noise::{parse_key_values, DeviceParams, Granularity, NoiseModel};
use srb_core::rb::{default_lengths, geometric_lengths, RBConfig};

use crate::CliError;

/// Measured single-qubit errors used by the `*_depolarizing` presets.
const SAMPLE_A_ERRORS: [f64; 2] = [0.0039, 0.0067];
const SAMPLE_B_ERRORS: [f64; 2] = [0.0029, 0.0037];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Ideal,
    Depolarizing,
    Decoherence,
    Crosstalk,
    CrosstalkDecoherence,
    Zz,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ideal => "ideal",
            ModelKind::Depolarizing => "depolarizing",
            ModelKind::Decoherence => "decoherence",
            ModelKind::Crosstalk => "crosstalk",
            ModelKind::CrosstalkDecoherence => "crosstalk+decoherence",
            ModelKind::Zz => "zz",
        }
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "ideal" => ModelKind::Ideal,
            "depolarizing" => ModelKind::Depolarizing,
            "decoherence" => ModelKind::Decoherence,
            "crosstalk" => ModelKind::Crosstalk,
            "crosstalk+decoherence" => ModelKind::CrosstalkDecoherence,
            "zz" | "coherent_zz" => ModelKind::Zz,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown model {other:?} (ideal, depolarizing, decoherence, crosstalk, crosstalk+decoherence, zz)"
                )))
            }
        })
    }
}

pub const PRESETS: [&str; 8] = [
    "ideal",
    "depolarizing",
    "coherent_zz",
    "sample_a",
    "sample_a_depolarizing",
    "sample_a_crosstalk",
    "sample_b",
    "sample_b_depolarizing",
];

/// Everything a `simulate` or `predict` run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub label: String,
    pub model: ModelKind,
    pub device: DeviceParams,
    /// Depolarizing parameter per error insertion, one per qubit.
    pub alpha: [f64; 2],
    pub zz_angle: f64,
    pub seed: u64,
    pub lengths: Vec<usize>,
    pub k: usize,
    pub granularity: Granularity,
    pub shots: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            label: "simulated".into(),
            model: ModelKind::Depolarizing,
            device: DeviceParams::default(),
            alpha: [0.999, 0.999],
            zz_angle: 0.1,
            seed: 0,
            lengths: default_lengths(),
            k: 50,
            granularity: Granularity::PerGenerator,
            shots: None,
        }
    }
}

/// Per-pulse depolarizing parameter giving gate error `r` per single-qubit
/// Clifford on average.
fn per_pulse_alpha(r: f64, pulses_per_clifford: f64) -> f64 {
    (1.0 - 2.0 * r).powf(1.0 / pulses_per_clifford)
}

fn c1_pulses() -> Result<f64, CliError> {
    Ok(CliffordGroup::generate_c1().map_err(analysis)?.average_pulse_count())
}

fn analysis(e: srb_core::Error) -> CliError {
    CliError::Analysis(e.to_string())
}

fn usage(e: srb_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let mut c = RunConfig { preset: Some(name.to_string()), label: name.to_string(), ..Default::default() };
        match name {
            "ideal" => c.model = ModelKind::Ideal,
            "depolarizing" => {}
            "coherent_zz" => c.model = ModelKind::Zz,
            "sample_a" | "sample_a_crosstalk" => {
                c.device = DeviceParams::sample_a();
                c.model = ModelKind::Crosstalk;
                c.lengths = geometric_lengths(512, 32);
            }
            "sample_a_depolarizing" | "sample_b_depolarizing" => {
                let (device, errors) = if name.starts_with("sample_a") {
                    (DeviceParams::sample_a(), SAMPLE_A_ERRORS)
                } else {
                    (DeviceParams::sample_b(), SAMPLE_B_ERRORS)
                };
                let pulses = c1_pulses()?;
                c.device = device;
                c.alpha = errors.map(|r| per_pulse_alpha(r, pulses));
                c.lengths = geometric_lengths(512, 32);
            }
            "sample_b" => {
                c.device = DeviceParams::sample_b();
                c.model = ModelKind::Crosstalk;
            }
            other => {
                return Err(CliError::Usage(format!("unknown preset {other:?}; known presets: {}", PRESETS.join(", "))))
            }
        }
        Ok(c)
    }

    /// Applies one `key = value` setting. Device keys are delegated to
    /// [`DeviceParams::set`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::Usage(format!("{key}: cannot parse {value:?} as {what}"));
        let float = || value.parse::<f64>().map_err(|_| bad("a number"));
        match key {
            "label" => self.label = value.to_string(),
            "model" => self.model = value.parse()?,
            "alpha" => {
                let a = float()?;
                self.alpha = [a, a];
            }
            "alpha1" => self.alpha[0] = float()?,
            "alpha2" => self.alpha[1] = float()?,
            "zz_angle" => self.zz_angle = float()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "lengths" => self.lengths = parse_lengths(value)?,
            "K" | "k" => self.k = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "granularity" => self.granularity = parse_granularity(value)?,
            "shots" => {
                self.shots = match value {
                    "none" | "exact" => None,
                    v => Some(v.parse().map_err(|_| bad("an unsigned integer"))?),
                }
            }
            _ => {
                if !self.device.set(key, value).map_err(usage)? {
                    return Err(CliError::Usage(format!("unknown configuration key {key:?}")));
                }
            }
        }
        Ok(())
    }

    /// Reads a configuration file. A `preset` key, wherever it appears, is
    /// applied before every other key.
    pub fn from_config_text(text: &str, preset_override: Option<&str>) -> Result<Self, CliError> {
        let entries = parse_key_values(text).map_err(usage)?;
        let preset = preset_override
            .map(str::to_string)
            .or_else(|| entries.iter().rev().find(|e| e.key == "preset").map(|e| e.value.clone()));
        let mut c = match preset {
            Some(p) => Self::from_preset(&p)?,
            None => Self::default(),
        };
        for e in entries.iter().filter(|e| e.key != "preset") {
            c.set(&e.key, &e.value)
                .map_err(|err| CliError::Usage(format!("config line {}: {}", e.line, err.message())))?;
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.rb_config().validate().map_err(usage)?;
        self.noise_model()?.validate().map_err(usage)
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        Ok(match self.model {
            ModelKind::Ideal => NoiseModel::Ideal,
            ModelKind::Depolarizing => NoiseModel::Depolarizing { alpha1: self.alpha[0], alpha2: self.alpha[1] },
            ModelKind::Decoherence => NoiseModel::Decoherence(self.device.clone()),
            ModelKind::Crosstalk => NoiseModel::CrossTalk(self.device.clone()),
            ModelKind::CrosstalkDecoherence => NoiseModel::Composite(vec![
                NoiseModel::CrossTalk(self.device.clone()),
                NoiseModel::Decoherence(self.device.clone()),
            ]),
            ModelKind::Zz => NoiseModel::CoherentZz { angle: self.zz_angle },
        })
    }

    pub fn rb_config(&self) -> RBConfig {
        RBConfig {
            lengths: self.lengths.clone(),
            k: self.k,
            seed: self.seed,
            granularity: self.granularity,
            shots: self.shots,
            ..RBConfig::new(srb_core::rb::Experiment::Exp1CxI)
        }
    }

    /// Canonical text form of the resolved configuration; it parses back to
    /// the same settings.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "label = {}", self.label);
        let _ = writeln!(out, "model = {}", self.model.name());
        let _ = writeln!(out, "alpha1 = {}", self.alpha[0]);
        let _ = writeln!(out, "alpha2 = {}", self.alpha[1]);
        let _ = writeln!(out, "zz_angle = {}", self.zz_angle);
        let _ = writeln!(out, "seed = {}", self.seed);
        let lengths: Vec<String> = self.lengths.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "lengths = {}", lengths.join(","));
        let _ = writeln!(out, "K = {}", self.k);
        let _ = writeln!(out, "granularity = {}", granularity_name(self.granularity));
        let _ = writeln!(out, "shots = {}", self.shots.map_or("exact".to_string(), |s| s.to_string()));
        out.push_str(&self.device.to_config());
        out
    }
}

pub fn granularity_name(g: Granularity) -> &'static str {
    match g {
        Granularity::PerGenerator => "per-generator",
        Granularity::PerClifford => "per-clifford",
    }
}

pub fn parse_granularity(s: &str) -> Result<Granularity, CliError> {
    match s {
        "per-generator" | "generator" => Ok(Granularity::PerGenerator),
        "per-clifford" | "clifford" => Ok(Granularity::PerClifford),
        other => Err(CliError::Usage(format!("unknown granularity {other:?} (per-generator, per-clifford)"))),
    }
}

/// `1,2,4,8` or `geometric:MAX:COUNT`.
pub fn parse_lengths(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse lengths {s:?}; use 1,2,4 or geometric:MAX:COUNT"));
    if let Some(rest) = s.strip_prefix("geometric:") {
        let (max, count) = rest.split_once(':').ok_or_else(bad)?;
        let max: usize = max.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if max == 0 || count == 0 || count > max {
            return Err(bad());
        }
        return Ok(geometric_lengths(max, count));
    }
    s.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| bad())).collect()
}

pub fn parse_group(s: &str) -> Result<GroupKind, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "c1" => Ok(GroupKind::C1),
        "cxc" => Ok(GroupKind::CxC),
        "cxi" => Ok(GroupKind::CxI),
        "ixc" => Ok(GroupKind::IxC),
        other => Err(CliError::Usage(format!("unknown group {other:?} (c1, cxc, cxi, ixc)"))),
    }
}
