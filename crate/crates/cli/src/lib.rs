//! Command-line frontend for the `srb-core` toolkit.
//!
//! Subcommands:
//! - `simulate` runs the three experiments under a noise model and writes
//!   curves, fits, a report, plot data and a manifest;
//! - `fit` analyses a curves CSV (simulated or measured);
//! - `predict` computes decay parameters of a model without sampling;
//! - `verify` runs the built-in oracle and calibration checks;
//! - `dump-group` prints a Clifford group table.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 analysis error,
//! 3 verification failure.

pub mod artifacts;
pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srb_core::clifford::CliffordGroup;
use srb_core::fit::FitOptions;
use srb_core::noise::predict_all;
use srb_core::rb::{curves_from_csv, run_all_experiments};
use srb_core::report::fit_curves;

use artifacts::{Analysis, ArtifactSet, Manifest};
use config::{parse_granularity, parse_group, RunConfig};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RB_ADDR_OUT";
const DEFAULT_OUT: &str = "srb_out";
/// Standard errors below this are raised to it before fitting; exact
/// simulations of an untouched qubit produce zero spread.
pub const SIGMA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Analysis(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Analysis(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Analysis(m) | CliError::Verification(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "srb", version, about = "Simultaneous randomized benchmarking and addressability analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate experiments 1-3 and analyse them.
    Simulate(SimulateArgs),
    /// Fit a curves CSV and build the addressability report.
    Fit(FitArgs),
    /// Predict decay parameters of a noise model without sampling.
    Predict(PredictArgs),
    /// Run the oracle and calibration checks.
    Verify(VerifyArgs),
    /// Print a Clifford group table as CSV.
    DumpGroup(DumpGroupArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named starting configuration, applied before the file and flags.
    #[arg(long)]
    pub preset: Option<String>,
    /// Noise model: ideal, depolarizing, decoherence, crosstalk, crosstalk+decoherence, zz.
    #[arg(long)]
    pub model: Option<String>,
    /// Error insertion: per-generator or per-clifford.
    #[arg(long)]
    pub granularity: Option<String>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated lengths or `geometric:MAX:COUNT`.
    #[arg(long)]
    pub lengths: Option<String>,
    /// Sequences per length.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Output directory (default: $RB_ADDR_OUT or ./srb_out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Confidence level of the intervals written to fits.json.
    #[arg(long, default_value_t = 0.68)]
    pub level: f64,
    /// Record wall-clock start and end times in the manifest.
    #[arg(long)]
    pub timestamps: bool,
}

#[derive(Debug, Args, Clone)]
pub struct FitArgs {
    /// Curves CSV with columns experiment,projection,m,mean,stderr,K.
    pub curves: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Confidence level of the intervals written to fits.json.
    #[arg(long, default_value_t = 0.68)]
    pub level: f64,
    /// Column label of the report.
    #[arg(long, default_value = "data")]
    pub label: String,
    #[arg(long)]
    pub timestamps: bool,
}

#[derive(Debug, Args, Clone)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also write prediction.json and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct VerifyArgs {
    /// quick or full.
    #[arg(long, default_value = "quick")]
    pub level: String,
    /// Entrywise tolerance of the twirl oracle comparisons.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
}

#[derive(Debug, Args, Clone)]
pub struct DumpGroupArgs {
    /// c1, cxc, cxi or ixc.
    #[arg(long, default_value = "c1")]
    pub group: String,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and maps
/// the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Fit(a) => fit(&a),
        Command::Predict(a) => predict(&a),
        Command::Verify(a) => verify::run(&a.level, a.tolerance),
        Command::DumpGroup(a) => dump_group(&a),
    }
}

fn output_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Resolves preset, config file and flags into one configuration. Returns
/// the configuration and the raw bytes of the file, if any.
pub fn resolve_config(
    args: &ModelArgs,
    default_preset: Option<&str>,
) -> Result<(RunConfig, Option<Vec<u8>>), CliError> {
    let (mut cfg, raw) = match &args.config {
        Some(path) => {
            let raw = read_file(path)?;
            let text = String::from_utf8(raw.clone())
                .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
            (RunConfig::from_config_text(&text, args.preset.as_deref())?, Some(raw))
        }
        None => match args.preset.as_deref().or(default_preset) {
            Some(p) => (RunConfig::from_preset(p)?, None),
            None => (RunConfig::default(), None),
        },
    };
    if let Some(m) = &args.model {
        cfg.model = m.parse()?;
    }
    if let Some(g) = &args.granularity {
        cfg.granularity = parse_granularity(g)?;
    }
    for kv in &args.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok((cfg, raw))
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let started = artifacts::now_unix();
    let (mut cfg, raw) = resolve_config(&a.model, None)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(l) = &a.lengths {
        cfg.lengths = config::parse_lengths(l)?;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    cfg.validate()?;
    srb_core::fit::z_value(a.level).map_err(|e| CliError::Usage(e.to_string()))?;
    let model = cfg.noise_model()?;
    let curves = run_all_experiments(&cfg.rb_config(), &model).map_err(|e| CliError::Analysis(e.to_string()))?;
    let bundle = fit_curves(&curves, &fit_options());
    let snapshot = cfg.snapshot();
    let analysis =
        Analysis::new(&curves, &bundle, a.level, &cfg.label, artifacts::provenance(&cfg, &model, &snapshot))?;
    let mut set = ArtifactSet::default();
    analysis.write_into(&mut set)?;
    let mut manifest = Manifest::new("simulate");
    manifest.config_snapshot = Some(snapshot.clone());
    manifest.config_hash = Some(artifacts::sha256_hex(snapshot.as_bytes()));
    manifest.seed = Some(cfg.seed);
    if let (Some(path), Some(raw)) = (&a.model.config, &raw) {
        manifest.add_input(path, raw);
    }
    let dir = output_dir(&a.out);
    finish(set, manifest, &dir, a.timestamps.then_some(started))?;
    print!("{}", analysis.summary_text());
    println!("artifacts written to {}", dir.display());
    analysis.failure_status()
}

fn fit_options() -> FitOptions {
    FitOptions { sigma_floor: Some(SIGMA_FLOOR), ..Default::default() }
}

fn fit(a: &FitArgs) -> Result<(), CliError> {
    let started = artifacts::now_unix();
    srb_core::fit::z_value(a.level).map_err(|e| CliError::Usage(e.to_string()))?;
    let raw = read_file(&a.curves)?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| CliError::Analysis(format!("{} is not UTF-8", a.curves.display())))?;
    let curves = curves_from_csv(&text).map_err(|e| CliError::Analysis(format!("{}: {e}", a.curves.display())))?;
    let bundle = fit_curves(&curves, &fit_options());
    let provenance =
        srb_core::report::Provenance { config_hash: Some(artifacts::sha256_hex(&raw)), ..Default::default() };
    let analysis = Analysis::new(&curves, &bundle, a.level, &a.label, provenance)?;
    let mut set = ArtifactSet::default();
    analysis.write_into(&mut set)?;
    let mut manifest = Manifest::new("fit");
    manifest.add_input(&a.curves, &raw);
    let dir = output_dir(&a.out);
    finish(set, manifest, &dir, a.timestamps.then_some(started))?;
    print!("{}", analysis.summary_text());
    println!("artifacts written to {}", dir.display());
    analysis.failure_status()
}

fn finish(mut set: ArtifactSet, mut manifest: Manifest, dir: &Path, started: Option<u64>) -> Result<(), CliError> {
    if let Some(s) = started {
        manifest.timestamps = Some(artifacts::Timestamps { started_unix: s, finished_unix: artifacts::now_unix() });
    }
    set.seal(manifest)?;
    set.write_to(dir)
}

fn predict(a: &PredictArgs) -> Result<(), CliError> {
    let (mut cfg, raw) = resolve_config(&a.model, Some("sample_a"))?;
    if a.model.config.is_none() && a.model.preset.is_none() && a.model.model.is_none() {
        cfg.model = config::ModelKind::Crosstalk;
    }
    let model = cfg.noise_model()?;
    model.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let prediction = predict_all(&model, cfg.granularity).map_err(|e| match e {
        srb_core::Error::MissingParams(_) | srb_core::Error::InvalidParams(_) => CliError::Usage(e.to_string()),
        other => CliError::Analysis(other.to_string()),
    })?;
    let snapshot = cfg.snapshot();
    let doc = artifacts::prediction_document(&cfg, &model, &prediction, &snapshot)?;
    let json = artifacts::to_json(&doc)?;
    println!("{json}");
    if a.out.is_some() || std::env::var_os(OUT_ENV).is_some_and(|v| !v.is_empty()) {
        let mut set = ArtifactSet::default();
        set.add("prediction.json", json.into_bytes());
        let mut manifest = Manifest::new("predict");
        manifest.config_hash = Some(artifacts::sha256_hex(snapshot.as_bytes()));
        manifest.config_snapshot = Some(snapshot);
        if let (Some(path), Some(raw)) = (&a.model.config, &raw) {
            manifest.add_input(path, raw);
        }
        finish(set, manifest, &output_dir(&a.out), None)?;
    }
    Ok(())
}

fn dump_group(a: &DumpGroupArgs) -> Result<(), CliError> {
    let kind = parse_group(&a.group)?;
    let group = match kind {
        srb_core::clifford::GroupKind::C1 => CliffordGroup::generate_c1(),
        k => CliffordGroup::product_group(k),
    }
    .map_err(|e| CliError::Analysis(e.to_string()))?;
    let csv = group.to_csv();
    match &a.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
