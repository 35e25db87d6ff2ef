//! Output files of a run: curves, fits, reports, plot data and the manifest
//! that digests them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use srb_core::clifford::CliffordGroup;
use srb_core::fit::{confidence_intervals, CorrelationFit, DecayFit};
use srb_core::noise::{ModelPrediction, NoiseModel};
use srb_core::rb::{curves_to_csv, Experiment, Projection, SurvivalCurve};
use srb_core::report::{
    build_report, delta_alpha, delta_r, gate_error_estimate, report_from_alphas, AddressabilityReport, Estimate,
    FitBundle, FitFailure, Provenance, REQUIRED_FITS,
};

use crate::config::{granularity_name, ModelKind, RunConfig};
use crate::CliError;

const PLOT_SAMPLES: usize = 64;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Analysis(format!("cannot serialize output: {e}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Timestamps {
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_snapshot: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input path as given on the command line → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → SHA-256.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "srb".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_snapshot: None,
            config_hash: None,
            seed: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timestamps: None,
        }
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }
}

/// Files to be written together, in order.
#[derive(Debug, Default)]
pub struct ArtifactSet {
    files: Vec<(String, Vec<u8>)>,
}

impl ArtifactSet {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Digests every file into the manifest and appends `manifest.json`.
    pub fn seal(&mut self, mut manifest: Manifest) -> Result<(), CliError> {
        for (name, bytes) in &self.files {
            manifest.outputs.insert(name.clone(), sha256_hex(bytes));
        }
        let json = to_json(&manifest)?;
        self.add("manifest.json", json.into_bytes());
        Ok(())
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Usage(format!("cannot write to {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes).map_err(io)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct Interval {
    a: [f64; 2],
    alpha: [f64; 2],
    b: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
struct FitRecord<'a> {
    experiment: Experiment,
    projection: Projection,
    #[serde(flatten)]
    fit: &'a DecayFit,
    /// Bounds at the requested confidence level; absent if the fit did not converge.
    interval: Option<Interval>,
}

#[derive(Debug, Clone, Serialize)]
struct FitsDocument<'a> {
    confidence_level: f64,
    /// Average physical pulses per Clifford of each experiment's group.
    pulses_per_clifford: BTreeMap<&'static str, f64>,
    fits: Vec<FitRecord<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correlation: Option<&'a CorrelationFit>,
    failures: &'a [FitFailure],
}

/// Report assembled from whatever subset of the five decay parameters is
/// available; absent quantities are `null` and listed under `missing`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialReport {
    pub sample_label: String,
    pub complete: bool,
    pub missing: Vec<String>,
    pub values: BTreeMap<&'static str, Option<Estimate>>,
}

fn partial_report(bundle: &FitBundle, label: &str) -> PartialReport {
    let alpha = |e: Experiment, p: Projection| bundle.fit(e, p).map(|f| Estimate::new(f.alpha, f.alpha_sigma()));
    let [a1, a2, a12g, a21g, a12] = REQUIRED_FITS.map(|(_, e, p)| alpha(e, p));
    let r = |a: Option<Estimate>| a.and_then(|a| gate_error_estimate(a, 2).ok());
    let (r1, r2, r12g, r21g) = (r(a1), r(a2), r(a12g), r(a21g));
    let mut values = BTreeMap::new();
    for (k, v) in [
        ("alpha_1", a1),
        ("alpha_2", a2),
        ("alpha_1_given_2", a12g),
        ("alpha_2_given_1", a21g),
        ("alpha_12", a12),
        ("r1", r1),
        ("r2", r2),
        ("r1_given_2", r12g),
        ("r2_given_1", r21g),
        ("dr1_given_2", r1.zip(r12g).map(|(a, b)| delta_r(a, b))),
        ("dr2_given_1", r2.zip(r21g).map(|(a, b)| delta_r(a, b))),
        ("dalpha", a12.zip(a12g.zip(a21g)).map(|(x, (y, z))| delta_alpha(x, y, z))),
    ] {
        values.insert(k, v);
    }
    let missing = srb_core::report::missing_fits(&bundle.fits);
    PartialReport { sample_label: label.to_string(), complete: missing.is_empty(), missing, values }
}

/// Everything derived from a set of curves.
pub struct Analysis<'a> {
    pub curves: &'a [SurvivalCurve],
    pub bundle: &'a FitBundle,
    pub level: f64,
    pub report: Option<AddressabilityReport>,
    pub partial: Option<PartialReport>,
}

impl<'a> Analysis<'a> {
    pub fn new(
        curves: &'a [SurvivalCurve],
        bundle: &'a FitBundle,
        level: f64,
        label: &str,
        provenance: Provenance,
    ) -> Result<Self, CliError> {
        let (report, partial) = match build_report(&bundle.fits, label, [2, 2], provenance) {
            Ok(r) => (Some(r), None),
            Err(srb_core::Error::MissingFit(_)) => (None, Some(partial_report(bundle, label))),
            Err(e) => return Err(CliError::Analysis(e.to_string())),
        };
        Ok(Self { curves, bundle, level, report, partial })
    }

    pub fn write_into(&self, set: &mut ArtifactSet) -> Result<(), CliError> {
        let csv = curves_to_csv(self.curves).map_err(|e| CliError::Analysis(e.to_string()))?;
        set.add("curves.csv", csv.into_bytes());
        set.add("fits.json", to_json(&self.fits_document()?)?.into_bytes());
        set.add("plot.csv", self.plot_csv().into_bytes());
        if let Some(r) = &self.report {
            set.add("report.json", to_json(r)?.into_bytes());
            set.add("report.txt", r.to_text_table().into_bytes());
        }
        if let Some(p) = &self.partial {
            set.add("report.json", to_json(p)?.into_bytes());
        }
        Ok(())
    }

    fn fits_document(&self) -> Result<FitsDocument<'_>, CliError> {
        let mut fits = Vec::new();
        for lf in &self.bundle.fits {
            let interval = confidence_intervals(&lf.fit, self.level).ok().map(|ci| Interval {
                a: [ci[0].0, ci[0].1],
                alpha: [ci[1].0, ci[1].1],
                b: [ci[2].0, ci[2].1],
            });
            fits.push(FitRecord { experiment: lf.experiment, projection: lf.projection, fit: &lf.fit, interval });
        }
        Ok(FitsDocument {
            confidence_level: self.level,
            pulses_per_clifford: pulses_per_clifford()?,
            fits,
            correlation: self.bundle.correlation.as_ref(),
            failures: &self.bundle.failures,
        })
    }

    /// `experiment,projection,m,fitted` samples of every fitted curve over
    /// its length range.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("experiment,projection,m,fitted\n");
        for lf in &self.bundle.fits {
            let (lo, hi) = match (lf.fit.lengths.first(), lf.fit.lengths.last()) {
                (Some(&lo), Some(&hi)) => (lo as f64, hi as f64),
                _ => continue,
            };
            for i in 0..PLOT_SAMPLES {
                let m = lo + (hi - lo) * i as f64 / (PLOT_SAMPLES - 1) as f64;
                let _ = writeln!(out, "{},{},{},{}", lf.experiment, lf.projection, m, lf.fit.evaluate(m));
            }
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        if let Some(r) = &self.report {
            out.push_str(&r.to_text_table());
        }
        if let Some(p) = &self.partial {
            let _ = writeln!(out, "full report skipped; missing {}", p.missing.join(", "));
            for (k, v) in &p.values {
                if let Some(v) = v {
                    let _ = writeln!(out, "{k:<16} {:.4} ± {:.4}", v.value, v.sigma);
                }
            }
        }
        for f in &self.bundle.failures {
            let _ = writeln!(out, "fit failed for {}/{}: {}", f.experiment, f.projection, f.message);
        }
        out
    }

    /// Analysis error when any curve could not be fitted.
    pub fn failure_status(&self) -> Result<(), CliError> {
        if self.bundle.failures.is_empty() {
            return Ok(());
        }
        let names: Vec<String> =
            self.bundle.failures.iter().map(|f| format!("{}/{}", f.experiment, f.projection)).collect();
        Err(CliError::Analysis(format!("could not fit {}", names.join(", "))))
    }
}

fn pulses_per_clifford() -> Result<BTreeMap<&'static str, f64>, CliError> {
    let mut out = BTreeMap::new();
    let c1 = CliffordGroup::generate_c1().map_err(|e| CliError::Analysis(e.to_string()))?;
    for e in Experiment::ALL {
        let g = CliffordGroup::product_from(&c1, e.group_kind()).map_err(|e| CliError::Analysis(e.to_string()))?;
        out.insert(e.name(), g.average_pulse_count());
    }
    Ok(out)
}

fn uses_device(kind: ModelKind) -> bool {
    matches!(kind, ModelKind::Decoherence | ModelKind::Crosstalk | ModelKind::CrosstalkDecoherence)
}

pub fn provenance(cfg: &RunConfig, model: &NoiseModel, snapshot: &str) -> Provenance {
    Provenance {
        config_hash: Some(sha256_hex(snapshot.as_bytes())),
        seed: Some(cfg.seed),
        model: Some(model.to_string()),
        gate_time: uses_device(cfg.model).then_some(cfg.device.gate_time),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionDocument {
    pub preset: Option<String>,
    pub model: String,
    pub granularity: &'static str,
    /// Generator pulse duration assumed by the model, in nanoseconds.
    pub gate_time_ns: Option<f64>,
    pub alphas: ModelPrediction,
    pub report: AddressabilityReport,
}

pub fn prediction_document(
    cfg: &RunConfig,
    model: &NoiseModel,
    p: &ModelPrediction,
    snapshot: &str,
) -> Result<PredictionDocument, CliError> {
    let alphas = [p.alpha_1, p.alpha_2, p.alpha_1_given_2, p.alpha_2_given_1, p.alpha_12].map(Estimate::exact);
    let mut report = report_from_alphas(alphas, [2, 2], &cfg.label).map_err(|e| CliError::Analysis(e.to_string()))?;
    report.provenance = provenance(cfg, model, snapshot);
    report.provenance.seed = None;
    Ok(PredictionDocument {
        preset: cfg.preset.clone(),
        model: model.to_string(),
        granularity: granularity_name(cfg.granularity),
        gate_time_ns: uses_device(cfg.model).then_some(cfg.device.gate_time * 1e9),
        alphas: *p,
        report,
    })
}
