//! Gate errors, addressability metrics and the correlation witness.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fit::{
    asymptote_of, fit_correlation_curve, fit_exponential_with, CorrelationFit, DecayFit, FitOptions,
    CHI2_VALID_THRESHOLD,
};
use crate::rb::{Experiment, Projection, SurvivalCurve};

/// A value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

/// `r = (d − 1)(1 − α)/d`.
pub fn gate_error(alpha: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension {d} below 2")));
    }
    let d = d as f64;
    Ok((d - 1.0) * (1.0 - alpha) / d)
}

/// [`gate_error`] with `σ_r = (d − 1)/d · σ_α`.
pub fn gate_error_estimate(alpha: Estimate, d: usize) -> Result<Estimate> {
    let r = gate_error(alpha.value, d)?;
    let f = (d as f64 - 1.0) / d as f64;
    Ok(Estimate::new(r, f * alpha.sigma))
}

/// `|r_k − r_{k|k'}|` with errors added in quadrature.
pub fn delta_r(r_k: Estimate, r_k_given: Estimate) -> Estimate {
    Estimate::new((r_k.value - r_k_given.value).abs(), r_k.sigma.hypot(r_k_given.sigma))
}

/// `α₁₂ − α_{1|2} α_{2|1}` with first-order error propagation.
pub fn delta_alpha(alpha_12: Estimate, alpha_1_given_2: Estimate, alpha_2_given_1: Estimate) -> Estimate {
    let value = alpha_12.value - alpha_1_given_2.value * alpha_2_given_1.value;
    let sigma = (alpha_12.sigma.powi(2)
        + (alpha_2_given_1.value * alpha_1_given_2.sigma).powi(2)
        + (alpha_1_given_2.value * alpha_2_given_1.sigma).powi(2))
    .sqrt();
    Estimate::new(value, sigma)
}

/// A fit tagged with the curve it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub experiment: Experiment,
    pub projection: Projection,
    pub fit: DecayFit,
}

/// The five decay parameters and where each is read from.
pub const REQUIRED_FITS: [(&str, Experiment, Projection); 5] = [
    ("alpha_1", Experiment::Exp1CxI, Projection::Q1),
    ("alpha_2", Experiment::Exp2IxC, Projection::Q2),
    ("alpha_1_given_2", Experiment::Exp3CxC, Projection::Q1),
    ("alpha_2_given_1", Experiment::Exp3CxC, Projection::Q2),
    ("alpha_12", Experiment::Exp3CxC, Projection::Corr),
];

/// A curve that could not be fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub experiment: Experiment,
    pub projection: Projection,
    pub message: String,
}

/// Fits of a set of curves. The `exp3/CORR` curve goes through
/// [`fit_correlation_curve`] when both conditional fits are available.
/// Curves that fail to fit are listed in `failures` and do not stop the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBundle {
    pub fits: Vec<LabeledFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationFit>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<FitFailure>,
}

impl FitBundle {
    pub fn fit(&self, experiment: Experiment, projection: Projection) -> Option<&DecayFit> {
        find(&self.fits, experiment, projection).map(|f| &f.fit)
    }
}

pub fn fit_curves(curves: &[SurvivalCurve], opts: &FitOptions) -> FitBundle {
    let single = |c: &SurvivalCurve| {
        let o = FitOptions { asymptote: opts.asymptote.or(Some(asymptote_of(c.projection))), ..*opts };
        fit_exponential_with(c, &o)
    };
    let is_corr = |c: &SurvivalCurve| c.experiment == Experiment::Exp3CxC && c.projection == Projection::Corr;
    let mut results: Vec<Option<Result<DecayFit>>> = curves.iter().map(|c| (!is_corr(c)).then(|| single(c))).collect();
    let conditional = |p: Projection| {
        curves.iter().zip(&results).find_map(|(c, r)| match r {
            Some(Ok(f)) if c.experiment == Experiment::Exp3CxC && c.projection == p => Some(f.alpha),
            _ => None,
        })
    };
    let (a12, a21) = (conditional(Projection::Q1), conditional(Projection::Q2));
    let mut correlation = None;
    for (c, r) in curves.iter().zip(results.iter_mut()) {
        if r.is_some() {
            continue;
        }
        *r = Some(match (a12, a21) {
            (Some(a12), Some(a21)) => fit_correlation_curve(c, a12, a21, opts).map(|cf| {
                let f = cf.fit.clone();
                correlation = Some(cf);
                f
            }),
            _ => single(c),
        });
    }
    let mut bundle = FitBundle { fits: Vec::new(), correlation, failures: Vec::new() };
    for (c, r) in curves.iter().zip(results) {
        match r.expect("every curve visited") {
            Ok(fit) => bundle.fits.push(LabeledFit { experiment: c.experiment, projection: c.projection, fit }),
            Err(e) => bundle.failures.push(FitFailure {
                experiment: c.experiment,
                projection: c.projection,
                message: e.to_string(),
            }),
        }
    }
    bundle
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Summary {
    pub experiment: Experiment,
    pub projection: Projection,
    pub chi2_reduced: f64,
    pub dof: usize,
    pub model_valid: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub model: Option<String>,
    /// Generator pulse duration assumed by the model, in seconds.
    pub gate_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressabilityReport {
    pub sample_label: String,
    pub dims: [usize; 2],
    pub alpha_1: Estimate,
    pub alpha_2: Estimate,
    pub alpha_1_given_2: Estimate,
    pub alpha_2_given_1: Estimate,
    pub alpha_12: Estimate,
    pub r1: Estimate,
    pub r2: Estimate,
    pub r1_given_2: Estimate,
    pub r2_given_1: Estimate,
    pub dr1_given_2: Estimate,
    pub dr2_given_1: Estimate,
    pub dalpha: Estimate,
    pub chi2: Vec<Chi2Summary>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

fn find<'a>(fits: &'a [LabeledFit], e: Experiment, p: Projection) -> Option<&'a LabeledFit> {
    fits.iter().find(|f| f.experiment == e && f.projection == p)
}

/// Names of the decay parameters that `fits` cannot supply.
pub fn missing_fits(fits: &[LabeledFit]) -> Vec<String> {
    REQUIRED_FITS
        .iter()
        .filter(|(_, e, p)| find(fits, *e, *p).is_none())
        .map(|(name, e, p)| format!("{name} ({e}/{p})"))
        .collect()
}

/// Alphas from the five required fits, in [`REQUIRED_FITS`] order.
pub fn alphas_from_fits(fits: &[LabeledFit]) -> Result<[Estimate; 5]> {
    let missing = missing_fits(fits);
    if !missing.is_empty() {
        return Err(Error::MissingFit(missing.join(", ")));
    }
    Ok(REQUIRED_FITS.map(|(_, e, p)| {
        let f = &find(fits, e, p).expect("checked").fit;
        Estimate::new(f.alpha, f.alpha_sigma())
    }))
}

/// Assembles the report from the five alphas, each with its sigma.
pub fn report_from_alphas(alphas: [Estimate; 5], dims: [usize; 2], sample_label: &str) -> Result<AddressabilityReport> {
    let [a1, a2, a12g, a21g, a12] = alphas;
    let r1 = gate_error_estimate(a1, dims[0])?;
    let r2 = gate_error_estimate(a2, dims[1])?;
    let r1_given_2 = gate_error_estimate(a12g, dims[0])?;
    let r2_given_1 = gate_error_estimate(a21g, dims[1])?;
    Ok(AddressabilityReport {
        sample_label: sample_label.to_string(),
        dims,
        alpha_1: a1,
        alpha_2: a2,
        alpha_1_given_2: a12g,
        alpha_2_given_1: a21g,
        alpha_12: a12,
        r1,
        r2,
        r1_given_2,
        r2_given_1,
        dr1_given_2: delta_r(r1, r1_given_2),
        dr2_given_1: delta_r(r2, r2_given_1),
        dalpha: delta_alpha(a12, a12g, a21g),
        chi2: Vec::new(),
        warnings: Vec::new(),
        provenance: Provenance::default(),
    })
}

/// Builds the report from fitted curves; qubit subsystems unless `dims` says otherwise.
pub fn build_report(
    fits: &[LabeledFit],
    sample_label: &str,
    dims: [usize; 2],
    provenance: Provenance,
) -> Result<AddressabilityReport> {
    let alphas = alphas_from_fits(fits)?;
    let mut report = report_from_alphas(alphas, dims, sample_label)?;
    for lf in fits {
        let f = &lf.fit;
        report.chi2.push(Chi2Summary {
            experiment: lf.experiment,
            projection: lf.projection,
            chi2_reduced: f.chi2_reduced,
            dof: f.dof,
            model_valid: f.model_valid,
        });
        if f.chi2_reduced > CHI2_VALID_THRESHOLD {
            report.warnings.push(format!(
                "{}/{}: reduced chi-square {:.3} above {}; single-exponential model suspect",
                lf.experiment, lf.projection, f.chi2_reduced, CHI2_VALID_THRESHOLD
            ));
        }
        if !f.alpha_physical {
            report.warnings.push(format!("{}/{}: alpha = {} outside (0, 1]", lf.experiment, lf.projection, f.alpha));
        }
        if f.degenerate {
            report
                .warnings
                .push(format!("{}/{}: flat curve, decay rate not identifiable", lf.experiment, lf.projection));
        }
    }
    report.provenance = provenance;
    Ok(report)
}

impl AddressabilityReport {
    /// Aligned text table with one row per quantity.
    pub fn to_text_table(&self) -> String {
        let rows: [(&str, &str, Estimate); 7] = [
            ("r_1", "CxI", self.r1),
            ("r_2", "IxC", self.r2),
            ("r_1|2", "CxC", self.r1_given_2),
            ("r_2|1", "CxC", self.r2_given_1),
            ("dr_1|2", "-", self.dr1_given_2),
            ("dr_2|1", "-", self.dr2_given_1),
            ("dalpha", "-", self.dalpha),
        ];
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:<6} {}", "", "Twirl", self.sample_label);
        let _ = writeln!(out, "{}", "-".repeat(34));
        for (name, group, e) in rows {
            let _ = writeln!(out, "{:<8} {:<6} {:.4} ± {:.4}", name, group, e.value, e.sigma);
        }
        if !self.chi2.is_empty() {
            let _ = writeln!(out);
            for c in &self.chi2 {
                let badge = if c.model_valid { "ok" } else { "suspect" };
                let _ = writeln!(
                    out,
                    "chi2_red {}/{:<4} {:>8.3} (dof {}) {}",
                    c.experiment, c.projection, c.chi2_reduced, c.dof, badge
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    /// The same report with the two qubits relabelled.
    pub fn swapped(&self) -> Self {
        Self {
            dims: [self.dims[1], self.dims[0]],
            alpha_1: self.alpha_2,
            alpha_2: self.alpha_1,
            alpha_1_given_2: self.alpha_2_given_1,
            alpha_2_given_1: self.alpha_1_given_2,
            r1: self.r2,
            r2: self.r1,
            r1_given_2: self.r2_given_1,
            r2_given_1: self.r1_given_2,
            dr1_given_2: self.dr2_given_1,
            dr2_given_1: self.dr1_given_2,
            ..self.clone()
        }
    }
}
