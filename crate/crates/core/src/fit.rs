//! Weighted Levenberg-Marquardt fits of exponential decays.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rb::{Projection, SurvivalCurve};

/// Largest reduced χ² for which a single exponential is accepted.
pub const CHI2_VALID_THRESHOLD: f64 = 2.0;
pub const MAX_ITERATIONS: usize = 500;

const REL_CHI2_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
const PARAM_NAMES: [&str; 3] = ["A", "alpha", "B"];

/// Result of fitting `F(m) = A αᵐ + B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    /// Covariance of `(A, α, B)`, scaled by the reduced χ².
    pub covariance: [[f64; 3]; 3],
    /// One-sigma half-widths of `(A, α, B)`.
    pub ci68: [f64; 3],
    pub chi2: f64,
    pub dof: usize,
    pub chi2_reduced: f64,
    /// `y − F(m)` at every point.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Data without variation; `α` cannot be identified.
    pub degenerate: bool,
    /// `α ∈ (0, 1]`.
    pub alpha_physical: bool,
    /// `chi2_reduced ≤ 2`.
    pub model_valid: bool,
    pub lengths: Vec<usize>,
}

impl DecayFit {
    pub fn params(&self) -> [f64; 3] {
        [self.a, self.alpha, self.b]
    }

    pub fn alpha_sigma(&self) -> f64 {
        self.ci68[1]
    }

    pub fn evaluate(&self, m: f64) -> f64 {
        self.a * self.alpha.powf(m) + self.b
    }
}

/// Options shared by the fitting routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Expected value of the curve at `m → ∞`, used to seed `B`.
    pub asymptote: Option<f64>,
    /// Replaces standard errors below this value; `None` rejects them.
    pub sigma_floor: Option<f64>,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { asymptote: None, sigma_floor: None, max_iterations: MAX_ITERATIONS }
    }
}

/// Outcome of a general weighted least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `JᵀWJ` at the solution.
    pub jtwj: DMatrix<f64>,
    /// `JᵀW(y − f)` at the solution.
    pub gradient: DVector<f64>,
    /// χ² after the start and after every accepted step.
    pub chi2_history: Vec<f64>,
}

fn evaluate<F>(model: &F, p: &[f64], xs: &[f64], ys: &[f64], w: &[f64]) -> (f64, DMatrix<f64>, DVector<f64>)
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let (n, k) = (xs.len(), p.len());
    let mut j = DMatrix::zeros(n, k);
    let mut r = DVector::zeros(n);
    let mut grad = vec![0.0; k];
    for i in 0..n {
        let f = model(p, xs[i], &mut grad);
        r[i] = (ys[i] - f) * w[i];
        for c in 0..k {
            j[(i, c)] = grad[c] * w[i];
        }
    }
    (r.norm_squared(), j, r)
}

/// Minimizes `Σ ((yᵢ − f(p, xᵢ)) / σᵢ)²`. `model` returns `f` and writes
/// `∂f/∂p` into its last argument.
pub fn levenberg_marquardt<F>(
    model: F,
    xs: &[f64],
    ys: &[f64],
    sigmas: &[f64],
    p0: &[f64],
    max_iterations: usize,
) -> LmOutcome
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let w: Vec<f64> = sigmas.iter().map(|s| 1.0 / s).collect();
    let mut p = p0.to_vec();
    let (mut chi2, mut j, mut r) = evaluate(&model, &p, xs, ys, &w);
    let mut lambda = 1e-3;
    let mut history = vec![chi2];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        if chi2 < 1e-30 {
            converged = true;
            break;
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut a = jtj.clone();
        for c in 0..p.len() {
            let d = jtj[(c, c)];
            a[(c, c)] += lambda * if d > 0.0 { d } else { 1.0 };
        }
        let step = match a.cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                lambda *= 10.0;
                if lambda > 1e20 {
                    break;
                }
                continue;
            }
        };
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let (chi2_new, j_new, r_new) = evaluate(&model, &trial, xs, ys, &w);
        if chi2_new.is_finite() && chi2_new <= chi2 {
            let rel = (chi2 - chi2_new) / chi2.max(f64::MIN_POSITIVE);
            p = trial;
            chi2 = chi2_new;
            j = j_new;
            r = r_new;
            history.push(chi2);
            lambda = (lambda / 10.0).max(1e-12);
            if rel < REL_CHI2_TOL || step.norm() < STEP_TOL {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
        }
    }
    let jtwj = j.transpose() * &j;
    let gradient = j.transpose() * &r;
    if !converged {
        // Stalled at a point where no direction lowers χ².
        let scale = jtwj.diagonal().iter().map(|d| d.sqrt()).fold(0.0, f64::max) * chi2.sqrt();
        converged = iterations < max_iterations && gradient.norm() <= 1e-8 * scale.max(1e-300);
    }
    LmOutcome { params: p, chi2, iterations, converged, jtwj, gradient, chi2_history: history }
}

/// `(JᵀWJ)⁻¹`, or the names of parameters in near-null directions.
pub fn invert_normal_matrix(jtwj: &DMatrix<f64>, names: &[&str]) -> Result<DMatrix<f64>> {
    let n = jtwj.nrows();
    let d: Vec<f64> = (0..n).map(|i| jtwj[(i, i)].abs().sqrt()).collect();
    if d.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        let bad = (0..n).filter(|&i| !(d[i] > 0.0 && d[i].is_finite())).map(|i| names[i].to_string()).collect();
        return Err(Error::Singular(bad));
    }
    // Work on the correlation matrix so scale differences do not mask rank loss.
    let c = DMatrix::from_fn(n, n, |i, j| jtwj[(i, j)] / (d[i] * d[j]));
    let eig = c.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut bad = Vec::new();
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= 1e-12 * max {
            let v = eig.eigenvectors.column(k);
            for i in 0..n {
                if v[i].abs() > 0.3 && !bad.contains(&names[i].to_string()) {
                    bad.push(names[i].to_string());
                }
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::Singular(bad));
    }
    let inv = c.try_inverse().ok_or_else(|| Error::Singular(names.iter().map(|s| s.to_string()).collect()))?;
    Ok(DMatrix::from_fn(n, n, |i, j| inv[(i, j)] / (d[i] * d[j])))
}

fn exp_model(p: &[f64], m: f64, grad: &mut [f64]) -> f64 {
    let (a, alpha) = (p[0], p[1]);
    let am = alpha.powi(m as i32);
    grad[0] = am;
    grad[1] = if m == 0.0 { 0.0 } else { a * m * alpha.powi(m as i32 - 1) };
    grad[2] = 1.0;
    a * am + p[2]
}

fn checked_sigmas(sigmas: &[f64], floor: Option<f64>) -> Result<Vec<f64>> {
    sigmas
        .iter()
        .enumerate()
        .map(|(i, &s)| match floor {
            Some(f) => Ok(s.max(f)),
            None if s > 0.0 && s.is_finite() => Ok(s),
            None => Err(Error::Fit(format!("standard error at point {} is not positive", i + 1))),
        })
        .collect()
}

/// Seeds `(A, α, B)` from the data.
pub fn initial_guess(ms: &[f64], ys: &[f64], sigmas: &[f64], asymptote: Option<f64>) -> [f64; 3] {
    let min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let margin = 0.05 * (max - min) + 1e-9;
    let b0 = match asymptote {
        Some(b) if b < min => b,
        _ => min - margin,
    };
    // Weighted log-linear regression of ln(y − B₀) against m.
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    for i in 0..ms.len() {
        let d = ys[i] - b0;
        if d <= 0.0 {
            continue;
        }
        let w = (d / sigmas[i]).powi(2);
        let z = d.ln();
        sw += w;
        sx += w * ms[i];
        sy += w * z;
        sxx += w * ms[i] * ms[i];
        sxy += w * ms[i] * z;
        used += 1;
    }
    let det = sw * sxx - sx * sx;
    if used >= 2 && det > 0.0 {
        let slope = (sw * sxy - sx * sy) / det;
        let intercept = (sy - slope * sx) / sw;
        let alpha = slope.exp().clamp(1e-3, 1.0 - 1e-9);
        [intercept.exp(), alpha, b0]
    } else {
        [max - b0, 0.99, b0]
    }
}

/// Fits `A αᵐ + B` to raw data.
pub fn fit_exponential_data(lengths: &[usize], ys: &[f64], sigmas: &[f64], opts: &FitOptions) -> Result<DecayFit> {
    let n = lengths.len();
    if ys.len() != n || sigmas.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ys.len().min(sigmas.len()) });
    }
    if n < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {n}")));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Fit("non-finite survival value".into()));
    }
    let sig = checked_sigmas(sigmas, opts.sigma_floor)?;
    let ms: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    let dof = n - 3;
    let mean = ys.iter().sum::<f64>() / n as f64;
    let spread = ys.iter().map(|y| (y - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * mean.abs().max(1.0) {
        let residuals: Vec<f64> = ys.iter().map(|y| y - mean).collect();
        let chi2: f64 = residuals.iter().zip(&sig).map(|(r, s)| (r / s).powi(2)).sum();
        return Ok(DecayFit {
            a: 0.0,
            alpha: 1.0,
            b: mean,
            covariance: [[0.0; 3]; 3],
            ci68: [0.0; 3],
            chi2,
            dof,
            chi2_reduced: chi2 / dof as f64,
            residuals,
            converged: true,
            iterations: 0,
            degenerate: true,
            alpha_physical: true,
            model_valid: chi2 / dof as f64 <= CHI2_VALID_THRESHOLD,
            lengths: lengths.to_vec(),
        });
    }
    let p0 = initial_guess(&ms, ys, &sig, opts.asymptote);
    let out = levenberg_marquardt(exp_model, &ms, ys, &sig, &p0, opts.max_iterations);
    if !out.converged {
        return Err(Error::Fit(format!(
            "no convergence after {} iterations (gradient norm {:.3e}); the decay model may not describe the data",
            out.iterations,
            out.gradient.norm()
        )));
    }
    let chi2_reduced = out.chi2 / dof as f64;
    let cov = invert_normal_matrix(&out.jtwj, &PARAM_NAMES)? * chi2_reduced;
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov[(i, j)];
        }
    }
    let ci68 = [0, 1, 2].map(|i| cov[(i, i)].max(0.0).sqrt());
    let p = &out.params;
    let mut scratch = [0.0; 3];
    let residuals = ms.iter().zip(ys).map(|(&m, &y)| y - exp_model(p, m, &mut scratch)).collect();
    Ok(DecayFit {
        a: p[0],
        alpha: p[1],
        b: p[2],
        covariance,
        ci68,
        chi2: out.chi2,
        dof,
        chi2_reduced,
        residuals,
        converged: true,
        iterations: out.iterations,
        degenerate: false,
        alpha_physical: p[1] > 0.0 && p[1] <= 1.0,
        model_valid: chi2_reduced <= CHI2_VALID_THRESHOLD,
        lengths: lengths.to_vec(),
    })
}

/// Fits one survival curve; the asymptote is seeded at ½ for all three
/// projections.
pub fn fit_exponential(curve: &SurvivalCurve) -> Result<DecayFit> {
    fit_exponential_with(curve, &FitOptions { asymptote: Some(asymptote_of(curve.projection)), ..Default::default() })
}

pub fn fit_exponential_with(curve: &SurvivalCurve, opts: &FitOptions) -> Result<DecayFit> {
    fit_exponential_data(&curve.lengths(), &curve.means(), &curve.stderrs(), opts)
}

pub fn asymptote_of(projection: Projection) -> f64 {
    match projection {
        Projection::Q1 | Projection::Q2 | Projection::Corr => 0.5,
    }
}

/// Two-sided normal quantile with the convention `z(0.68) = 1`.
pub fn z_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} outside (0, 1)")));
    }
    if (level - 0.68).abs() < 1e-12 {
        return Ok(1.0);
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(0.5 + level / 2.0))
}

/// `(lower, upper)` bounds of `(A, α, B)` at the given level.
pub fn confidence_intervals(fit: &DecayFit, level: f64) -> Result<[(f64, f64); 3]> {
    if !fit.converged {
        return Err(Error::Fit("confidence intervals need a converged fit".into()));
    }
    let z = z_value(level)?;
    let p = fit.params();
    Ok([0, 1, 2].map(|i| {
        let h = z * fit.covariance[i][i].max(0.0).sqrt();
        (p[i] - h, p[i] + h)
    }))
}

/// Result of repeated fits to synthetic data with known parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageOutcome {
    pub repetitions: usize,
    /// Fits whose interval for `α` at the requested level contains the truth.
    pub hits: usize,
    pub failed_fits: usize,
}

impl CoverageOutcome {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.repetitions as f64
    }
}

/// Fits `repetitions` noisy copies of `A αᵐ + B` (Gaussian noise of width
/// `sigma`, reported as the standard error) and counts how often the
/// interval at `level` covers the true `α`.
pub fn coverage_study(
    truth: [f64; 3],
    sigma: f64,
    lengths: &[usize],
    repetitions: usize,
    level: f64,
    seed: u64,
) -> Result<CoverageOutcome> {
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let noise = rand_distr::Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let clean: Vec<f64> = lengths.iter().map(|&m| truth[0] * truth[1].powi(m as i32) + truth[2]).collect();
    let sigmas = vec![sigma; lengths.len()];
    let opts = FitOptions { asymptote: Some(truth[2]), ..Default::default() };
    let mut out = CoverageOutcome { repetitions, hits: 0, failed_fits: 0 };
    for _ in 0..repetitions {
        let ys: Vec<f64> = clean.iter().map(|y| y + noise.sample(&mut rng)).collect();
        let ci = fit_exponential_data(lengths, &ys, &sigmas, &opts).and_then(|f| confidence_intervals(&f, level));
        match ci {
            Ok(ci) if ci[1].0 <= truth[1] && truth[1] <= ci[1].1 => out.hits += 1,
            Ok(_) => {}
            Err(_) => out.failed_fits += 1,
        }
    }
    Ok(out)
}

/// `(χ², dof, χ²/dof)` with `dof = N − n_params`.
pub fn reduced_chi_square(ys: &[f64], sigmas: &[f64], model: &[f64], n_params: usize) -> Result<(f64, usize, f64)> {
    if ys.len() != sigmas.len() || ys.len() != model.len() {
        return Err(Error::DimensionMismatch { expected: ys.len(), got: model.len() });
    }
    if ys.len() <= n_params {
        return Err(Error::Fit(format!("{} points leave no degrees of freedom", ys.len())));
    }
    let mut chi2 = 0.0;
    for i in 0..ys.len() {
        if !(sigmas[i] > 0.0) {
            return Err(Error::Fit(format!("standard error at point {} is not positive", i + 1)));
        }
        chi2 += ((ys[i] - model[i]) / sigmas[i]).powi(2);
    }
    let dof = ys.len() - n_params;
    Ok((chi2, dof, chi2 / dof as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationMethod {
    /// `A₁₂ α₁₂ᵐ + B`.
    Single,
    /// `A₁ α_{1|2}ᵐ + A₂ α_{2|1}ᵐ + A₁₂ α₁₂ᵐ + B` with the two single-qubit rates fixed.
    Triple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    pub method: CorrelationMethod,
    /// `(A₁₂, α₁₂, B)` with their uncertainties.
    pub fit: DecayFit,
    /// Fitted background amplitudes `A₁, A₂` and their sigmas, for the triple model.
    pub background: Option<[(f64, f64); 2]>,
    pub note: Option<String>,
}

fn triple_fit(
    curve: &SurvivalCurve,
    a12: f64,
    a21: f64,
    start: &DecayFit,
    opts: &FitOptions,
) -> Result<(DecayFit, [(f64, f64); 2])> {
    let lengths = curve.lengths();
    let ms: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    let ys = curve.means();
    let sig = checked_sigmas(&curve.stderrs(), opts.sigma_floor)?;
    let n = ms.len();
    if n < 6 {
        return Err(Error::Fit("the triple model needs at least 6 points".into()));
    }
    // p = (A₁, A₂, A₁₂, α₁₂, B)
    let model = |p: &[f64], m: f64, g: &mut [f64]| {
        g[0] = a12.powi(m as i32);
        g[1] = a21.powi(m as i32);
        g[2] = p[3].powi(m as i32);
        g[3] = if m == 0.0 { 0.0 } else { p[2] * m * p[3].powi(m as i32 - 1) };
        g[4] = 1.0;
        p[0] * g[0] + p[1] * g[1] + p[2] * g[2] + p[4]
    };
    let p0 = [0.0, 0.0, start.a, start.alpha, start.b];
    let out = levenberg_marquardt(model, &ms, &ys, &sig, &p0, opts.max_iterations);
    if !out.converged {
        return Err(Error::Fit(format!(
            "no convergence after {} iterations (gradient norm {:.3e}); the decay model may not describe the data",
            out.iterations,
            out.gradient.norm()
        )));
    }
    let dof = n - 5;
    let chi2_reduced = out.chi2 / dof as f64;
    let cov = invert_normal_matrix(&out.jtwj, &["A1", "A2", "A12", "alpha12", "B"])? * chi2_reduced;
    let idx = [2, 3, 4];
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = cov[(idx[i], idx[j])];
        }
    }
    let p = &out.params;
    let mut g = [0.0; 5];
    let residuals = ms.iter().zip(&ys).map(|(&m, &y)| y - model(p, m, &mut g)).collect();
    let fit = DecayFit {
        a: p[2],
        alpha: p[3],
        b: p[4],
        covariance,
        ci68: idx.map(|i| cov[(i, i)].max(0.0).sqrt()),
        chi2: out.chi2,
        dof,
        chi2_reduced,
        residuals,
        converged: true,
        iterations: out.iterations,
        degenerate: false,
        alpha_physical: p[3] > 0.0 && p[3] <= 1.0,
        model_valid: chi2_reduced <= CHI2_VALID_THRESHOLD,
        lengths,
    };
    let bg = [(p[0], cov[(0, 0)].max(0.0).sqrt()), (p[1], cov[(1, 1)].max(0.0).sqrt())];
    Ok((fit, bg))
}

/// Estimates `α₁₂` from the correlation curve given the two conditional
/// single-qubit rates. The triple model is tried first; when either
/// background amplitude is significant it is kept, otherwise (or when it is
/// ill-conditioned) the single exponential is reported.
pub fn fit_correlation_curve(
    curve: &SurvivalCurve,
    alpha_1_given_2: f64,
    alpha_2_given_1: f64,
    opts: &FitOptions,
) -> Result<CorrelationFit> {
    let mut opts_single = *opts;
    opts_single.asymptote = opts.asymptote.or(Some(0.5));
    let single = fit_exponential_with(curve, &opts_single)?;
    if single.degenerate {
        return Ok(CorrelationFit { method: CorrelationMethod::Single, fit: single, background: None, note: None });
    }
    match triple_fit(curve, alpha_1_given_2, alpha_2_given_1, &single, opts) {
        Ok((fit, bg)) if bg.iter().any(|(a, s)| a.abs() > 2.0 * s) => {
            Ok(CorrelationFit { method: CorrelationMethod::Triple, fit, background: Some(bg), note: None })
        }
        Ok((_, bg)) => Ok(CorrelationFit {
            method: CorrelationMethod::Single,
            fit: single,
            background: Some(bg),
            note: Some("background amplitudes consistent with zero".into()),
        }),
        Err(e) => Ok(CorrelationFit {
            method: CorrelationMethod::Single,
            fit: single,
            background: None,
            note: Some(format!("triple model rejected: {e}")),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rb::{geometric_lengths, CurvePoint, Experiment};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal as Gauss};

    fn curve(lengths: &[usize], ys: &[f64], sigma: f64, projection: Projection) -> SurvivalCurve {
        SurvivalCurve {
            experiment: Experiment::Exp3CxC,
            projection,
            points: lengths.iter().zip(ys).map(|(&m, &y)| CurvePoint { m, mean: y, stderr: sigma, k: 50 }).collect(),
            raw: None,
        }
    }

    #[test]
    fn noiseless_recovery() {
        let ls = geometric_lengths(256, 12);
        let ys: Vec<f64> = ls.iter().map(|&m| 0.5 * 0.99f64.powi(m as i32) + 0.5).collect();
        let f = fit_exponential(&curve(&ls, &ys, 0.01, Projection::Q1)).unwrap();
        assert!((f.a - 0.5).abs() < 1e-8 && (f.alpha - 0.99).abs() < 1e-8 && (f.b - 0.5).abs() < 1e-8);
        assert!(f.ci68.iter().all(|&w| w < 1e-6));
        assert!(f.converged && f.alpha_physical && !f.degenerate);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let ls = [1, 2, 4, 8, 16];
        let f = fit_exponential(&curve(&ls, &[0.25; 5], 0.01, Projection::Corr)).unwrap();
        assert!(f.degenerate);
        assert_eq!((f.a, f.alpha, f.b), (0.0, 1.0, 0.25));
    }

    #[test]
    fn rejects_bad_inputs() {
        let ls = [1, 2, 4, 8];
        assert!(fit_exponential(&curve(&ls, &[0.9, 0.8, 0.7, 0.6], 0.0, Projection::Q1)).is_err());
        assert!(fit_exponential(&curve(&ls[..3], &[0.9, 0.8, 0.7], 0.01, Projection::Q1)).is_err());
        assert!(reduced_chi_square(&[1.0, 2.0, 3.0], &[1.0; 3], &[1.0, 2.0, 3.0], 3).is_err());
    }

    #[test]
    fn chi_square_of_exact_model_is_zero() {
        let (chi2, dof, red) = reduced_chi_square(&[0.9, 0.8, 0.7, 0.6], &[0.1; 4], &[0.9, 0.8, 0.7, 0.6], 3).unwrap();
        assert_eq!((chi2, dof, red), (0.0, 1, 0.0));
    }

    #[test]
    fn z_values() {
        assert_eq!(z_value(0.68).unwrap(), 1.0);
        assert!((z_value(0.95).unwrap() - 1.959964).abs() < 1e-5);
        assert!(z_value(1.0).is_err());
    }

    #[test]
    fn objective_never_increases_and_gradient_vanishes() {
        let ls = geometric_lengths(300, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Gauss::new(0.0, 0.005).unwrap();
        let ys: Vec<f64> = ls.iter().map(|&m| 0.45 * 0.985f64.powi(m as i32) + 0.52 + noise.sample(&mut rng)).collect();
        let ms: Vec<f64> = ls.iter().map(|&m| m as f64).collect();
        let sig = vec![0.005; ls.len()];
        let p0 = initial_guess(&ms, &ys, &sig, Some(0.5));
        let out = levenberg_marquardt(exp_model, &ms, &ys, &sig, &p0, 500);
        assert!(out.converged);
        assert!(out.chi2_history.windows(2).all(|w| w[1] <= w[0]));
        let scale = out.jtwj.diagonal().iter().map(|d| d.sqrt()).fold(0.0, f64::max) * out.chi2.sqrt();
        assert!(out.gradient.norm() < 1e-4 * scale, "{} vs {}", out.gradient.norm(), scale);
    }

    #[test]
    fn permuting_points_leaves_fit_unchanged() {
        let ls = vec![1, 3, 7, 15, 40, 90, 200];
        let ys = [0.98, 0.95, 0.93, 0.88, 0.80, 0.70, 0.58];
        let f = fit_exponential_data(&ls, &ys, &[0.01; 7], &FitOptions::default()).unwrap();
        let order = [4, 0, 6, 2, 5, 1, 3];
        let lp: Vec<usize> = order.iter().map(|&i| ls[i]).collect();
        let yp: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
        let g = fit_exponential_data(&lp, &yp, &[0.01; 7], &FitOptions::default()).unwrap();
        assert!((f.alpha - g.alpha).abs() < 1e-9 && (f.a - g.a).abs() < 1e-8);
    }

    #[test]
    fn doubled_sigmas_double_the_intervals() {
        // Scatter and declared errors doubled together.
        let ls = geometric_lengths(400, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = Gauss::new(0.0, 0.005).unwrap();
        let draws: Vec<f64> = ls.iter().map(|_| noise.sample(&mut rng)).collect();
        let truth: Vec<f64> = ls.iter().map(|&m| 0.5 * 0.99f64.powi(m as i32) + 0.5).collect();
        let y1: Vec<f64> = truth.iter().zip(&draws).map(|(t, d)| t + d).collect();
        let y2: Vec<f64> = truth.iter().zip(&draws).map(|(t, d)| t + 2.0 * d).collect();
        let a = fit_exponential_data(&ls, &y1, &[0.005; 16], &FitOptions::default()).unwrap();
        let b = fit_exponential_data(&ls, &y2, &[0.01; 16], &FitOptions::default()).unwrap();
        for i in 0..3 {
            assert!((b.ci68[i] / a.ci68[i] - 2.0).abs() < 0.1, "{i}: {}", b.ci68[i] / a.ci68[i]);
        }
    }

    #[test]
    fn correlation_fit_product_value() {
        let ls = geometric_lengths(300, 24);
        let (a12, a21) = (0.98f64, 0.97f64);
        let ys: Vec<f64> = ls.iter().map(|&m| 0.5 * (a12 * a21).powi(m as i32) + 0.5).collect();
        let c =
            fit_correlation_curve(&curve(&ls, &ys, 1e-3, Projection::Corr), a12, a21, &FitOptions::default()).unwrap();
        assert_eq!(c.method, CorrelationMethod::Single);
        assert!((c.fit.alpha - a12 * a21).abs() < 1e-8);
        let ys: Vec<f64> = ls.iter().map(|&m| 0.1 * a12.powi(m as i32) + 0.35 * 0.95f64.powi(m as i32) + 0.5).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = Gauss::new(0.0, 1e-4).unwrap();
        let ys: Vec<f64> = ys.iter().map(|y| y + noise.sample(&mut rng)).collect();
        let c =
            fit_correlation_curve(&curve(&ls, &ys, 1e-4, Projection::Corr), a12, a21, &FitOptions::default()).unwrap();
        assert_eq!(c.method, CorrelationMethod::Triple);
        assert!((c.fit.alpha - 0.95).abs() < 4.0 * c.fit.ci68[1]);
    }

    #[test]
    fn coverage_of_the_68_percent_interval() {
        let ls = geometric_lengths(512, 32);
        let alpha: f64 = 0.9922;
        let noise = Gauss::new(0.0, 0.005).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut inside = 0;
        for _ in 0..100 {
            let ys: Vec<f64> = ls.iter().map(|&m| 0.5 * alpha.powi(m as i32) + 0.5 + noise.sample(&mut rng)).collect();
            let f = fit_exponential_data(&ls, &ys, &vec![0.005; 32], &FitOptions::default()).unwrap();
            if (f.alpha - alpha).abs() <= 3.0 * f.ci68[1] {
                inside += 1;
            }
        }
        assert!(inside >= 95, "{inside}");
    }

    #[test]
    fn coverage_near_nominal_level() {
        let lengths: Vec<usize> = (0..24).map(|i| 1 + 20 * i).collect();
        let out = coverage_study([0.5, 0.99, 0.5], 0.005, &lengths, 300, 0.68, 1).unwrap();
        assert_eq!(out.failed_fits, 0);
        assert!((0.6..0.76).contains(&out.fraction()), "{}", out.fraction());
    }
}
