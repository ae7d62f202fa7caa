//! Log marginal likelihood evaluators.
//!
//! Values are on the natural-log scale and may drop model-independent
//! constants; only differences between models are meaningful.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{self, Dataset, Family, WeightVariant};
use crate::linalg::{log_det_spd, weighted_gram, wls_solve};
use crate::model_space::Model;
use crate::optim::{irls_with, s_irls_sgd_coefficients, IrlsOptions, SirlsSgdConfig, WarmStart};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvidenceSpec {
    /// `ℓ(θ̂) − (|θ|/2) ln n`.
    LaplaceBic,
    /// Laplace approximation with independent `N(0, prior_sd²)` coefficient
    /// priors; an infinite `prior_sd` gives a flat prior.
    LaplaceFull { prior_sd: f64 },
    /// Zellner g-prior, Gaussian family only.
    GPriorGaussian { g: f64 },
    /// `−½(D + 2Σγ)`.
    Aic,
}

impl EvidenceSpec {
    pub fn validate(&self, family: Family) -> Result<()> {
        match *self {
            EvidenceSpec::GPriorGaussian { g } => {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::invalid(format!("g must be positive, got {g}")));
                }
                if family != Family::GaussianIdentity {
                    return Err(Error::invalid("the g-prior evidence needs the Gaussian family"));
                }
            }
            EvidenceSpec::LaplaceFull { prior_sd } => {
                if !(prior_sd > 0.0) {
                    return Err(Error::invalid("prior_sd must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogEvidence {
    pub value: f64,
    pub exact: bool,
}

/// How coefficients are estimated before the evidence is formed.
#[derive(Debug, Clone)]
pub enum Fitter {
    Irls(IrlsOptions),
    SirlsSgd(SirlsSgdConfig),
}

impl Fitter {
    pub fn irls() -> Self {
        Fitter::Irls(IrlsOptions::default())
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Fitter::Irls(_))
    }
}

fn check_model(data: &Dataset, model: &Model) -> Result<()> {
    if model.p() != data.p() {
        return Err(Error::invalid(format!("model has p = {}, data has p = {}", model.p(), data.p())));
    }
    Ok(())
}

fn check_len(beta: &[f64], k: usize) -> Result<()> {
    if beta.len() != k {
        return Err(Error::invalid(format!("expected {k} coefficients, got {}", beta.len())));
    }
    Ok(())
}

pub fn log_mlik_bic(data: &Dataset, model: &Model, beta_hat: &[f64]) -> Result<LogEvidence> {
    check_model(data, model)?;
    let sub = data.select_columns(&model.active_columns())?;
    check_len(beta_hat, sub.m())?;
    Ok(LogEvidence { value: bic_selected(&sub, beta_hat), exact: false })
}

pub(crate) fn bic_selected(sub: &Dataset, beta: &[f64]) -> f64 {
    glm::log_likelihood_unchecked(sub, beta) - 0.5 * sub.m() as f64 * (sub.n() as f64).ln()
}

/// `ln p(y|θ̃) + ln p(θ̃) + (|θ|/2) ln 2π − ½ ln det S` with `S` the GLM
/// information at the mode plus `prior_precision` on the diagonal.
pub fn log_mlik_laplace_full(
    data: &Dataset,
    model: &Model,
    mode: &[f64],
    log_prior_at_mode: f64,
    prior_precision: f64,
) -> Result<LogEvidence> {
    check_model(data, model)?;
    let sub = data.select_columns(&model.active_columns())?;
    check_len(mode, sub.m())?;
    Ok(LogEvidence { value: laplace_selected(&sub, mode, log_prior_at_mode, prior_precision)?, exact: false })
}

pub(crate) fn laplace_selected(sub: &Dataset, mode: &[f64], log_prior: f64, precision: f64) -> Result<f64> {
    if !(precision >= 0.0) {
        return Err(Error::invalid("prior precision must be nonnegative"));
    }
    let k = sub.m();
    let st = glm::working_quantities(sub, mode, WeightVariant::Fisher)?;
    let mut w = st.w;
    if sub.family() == Family::GaussianIdentity {
        let rss = glm::deviance_unchecked(sub, mode);
        let s2 = (rss / sub.n() as f64).max(glm::SIGMA2_FLOOR);
        w.iter_mut().for_each(|v| *v /= s2);
    }
    let mut s = weighted_gram(sub, &w);
    for j in 0..k {
        s[(j, j)] += precision;
    }
    let logdet = log_det_spd(s).ok_or(Error::Curvature)?;
    let ll = glm::log_likelihood_unchecked(sub, mode);
    Ok(ll + log_prior + 0.5 * k as f64 * (2.0 * PI).ln() - 0.5 * logdet)
}

/// `((n−p−1)/2) ln(1+g) − ((n−1)/2) ln(1+g(1−R²))`.
pub fn gprior_formula(n: usize, p: usize, g: f64, r2: f64) -> f64 {
    let n = n as f64;
    let p = p as f64;
    0.5 * (n - p - 1.0) * g.ln_1p() - 0.5 * (n - 1.0) * (g * (1.0 - r2)).ln_1p()
}

pub fn log_mlik_gprior(data: &Dataset, model: &Model, g: f64) -> Result<LogEvidence> {
    EvidenceSpec::GPriorGaussian { g }.validate(data.family())?;
    let r2 = r_squared(data, model)?;
    Ok(LogEvidence { value: gprior_formula(data.n(), model.size(), g, r2), exact: true })
}

pub fn log_mlik_aic(deviance: f64, model: &Model) -> Result<LogEvidence> {
    if !(deviance >= 0.0) {
        return Err(Error::invalid(format!("deviance must be nonnegative, got {deviance}")));
    }
    Ok(LogEvidence { value: aic_value(deviance, model.size()), exact: false })
}

#[inline]
fn aic_value(deviance: f64, size: usize) -> f64 {
    -0.5 * (deviance + 2.0 * size as f64)
}

fn total_sum_of_squares(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum()
}

fn ols(sub: &Dataset) -> Result<Vec<f64>> {
    let rows: Vec<usize> = (0..sub.n()).collect();
    let w = vec![1.0; sub.n()];
    wls_solve(sub, &rows, &w, sub.y(), None).ok_or_else(|| Error::RankDeficient {
        model: sub.names().join("+"),
        detail: "XᵀX is singular".into(),
    })
}

/// OLS coefficient of determination of the model.
pub fn r_squared(data: &Dataset, model: &Model) -> Result<f64> {
    check_model(data, model)?;
    if data.family() != Family::GaussianIdentity {
        return Err(Error::invalid("R² needs the Gaussian family"));
    }
    let tss = total_sum_of_squares(data.y());
    if !(tss > 0.0) {
        return Err(Error::invalid("response is constant"));
    }
    if model.size() == 0 {
        return Ok(0.0);
    }
    let sub = data.select_columns(&model.active_columns())?;
    let beta = ols(&sub)?;
    let rss = glm::deviance_unchecked(&sub, &beta);
    Ok((1.0 - rss / tss).clamp(0.0, 1.0))
}

/// Outcome of fitting one model and scoring it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub log_evidence: f64,
    pub beta: Vec<f64>,
    pub sgd_position: usize,
    pub exact: bool,
}

/// Coefficients on the model's own design (`sub` already holds only the
/// active columns) and the SGD schedule position reached.
pub(crate) fn fit_selected<R: Rng + ?Sized>(
    sub: &Dataset,
    spec: &EvidenceSpec,
    fitter: &Fitter,
    warm: Option<&WarmStart>,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    if let EvidenceSpec::LaplaceFull { prior_sd } = *spec {
        let mut opts = match fitter {
            Fitter::Irls(o) => o.clone(),
            Fitter::SirlsSgd(_) => IrlsOptions::default(),
        };
        if prior_sd.is_finite() {
            let lambda = match sub.family() {
                Family::GaussianIdentity => {
                    let b = ols(sub)?;
                    let s2 = (glm::deviance_unchecked(sub, &b) / sub.n() as f64).max(glm::SIGMA2_FLOOR);
                    s2 / (prior_sd * prior_sd)
                }
                Family::BernoulliLogit => 1.0 / (prior_sd * prior_sd),
            };
            opts.ridge = Some(vec![lambda; sub.m()]);
        }
        return Ok((irls_with(sub, &opts)?.beta.into_inner(), 0));
    }
    match fitter {
        Fitter::Irls(o) => {
            if sub.family() == Family::GaussianIdentity {
                Ok((ols(sub)?, 0))
            } else {
                Ok((irls_with(sub, o)?.beta.into_inner(), 0))
            }
        }
        Fitter::SirlsSgd(cfg) => s_irls_sgd_coefficients(sub, cfg, warm, rng),
    }
}

/// Log evidence of the model at the given coefficients.
pub(crate) fn evidence_selected(sub: &Dataset, size: usize, spec: &EvidenceSpec, beta: &[f64]) -> Result<f64> {
    let v = match *spec {
        EvidenceSpec::LaplaceBic => bic_selected(sub, beta),
        EvidenceSpec::Aic => aic_value(glm::deviance_unchecked(sub, beta), size),
        EvidenceSpec::GPriorGaussian { g } => {
            if size == 0 {
                0.0
            } else {
                let tss = total_sum_of_squares(sub.y());
                if !(tss > 0.0) {
                    return Err(Error::invalid("response is constant"));
                }
                let r2 = (1.0 - glm::deviance_unchecked(sub, beta) / tss).min(1.0);
                gprior_formula(sub.n(), size, g, r2)
            }
        }
        EvidenceSpec::LaplaceFull { prior_sd } => {
            let (lp, prec) = if prior_sd.is_finite() {
                let var = prior_sd * prior_sd;
                let lp = beta.iter().map(|b| -0.5 * (2.0 * PI * var).ln() - 0.5 * b * b / var).sum();
                (lp, 1.0 / var)
            } else {
                (0.0, 0.0)
            };
            laplace_selected(sub, beta, lp, prec)?
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("evidence evaluated to {v}")))
    }
}

/// Fits `model` with `fitter` and evaluates its log evidence.
pub fn evaluate_model<R: Rng + ?Sized>(
    data: &Dataset,
    model: &Model,
    spec: &EvidenceSpec,
    fitter: &Fitter,
    warm: Option<&WarmStart>,
    rng: &mut R,
) -> Result<Evaluation> {
    check_model(data, model)?;
    spec.validate(data.family())?;
    let sub = data.select_columns(&model.active_columns())?;
    evaluate_selected(&sub, model, spec, fitter, warm, rng)
}

pub(crate) fn evaluate_selected<R: Rng + ?Sized>(
    sub: &Dataset,
    model: &Model,
    spec: &EvidenceSpec,
    fitter: &Fitter,
    warm: Option<&WarmStart>,
    rng: &mut R,
) -> Result<Evaluation> {
    let (beta, sgd_position) = fit_selected(sub, spec, fitter, warm, rng)?;
    let log_evidence = evidence_selected(sub, model.size(), spec, &beta)?;
    let exact = matches!(spec, EvidenceSpec::GPriorGaussian { .. }) && fitter.is_deterministic();
    Ok(Evaluation { log_evidence, beta, sgd_position, exact })
}

/// Gram matrix helper kept for tests that assemble the information directly.
pub fn information_matrix(data: &Dataset, beta: &[f64]) -> Result<DMatrix<f64>> {
    let st = glm::working_quantities(data, beta, WeightVariant::Fisher)?;
    Ok(weighted_gram(data, &st.w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bic_substitution() {
        // ln p = −50, |θ| = 2, n = 100
        let v = -50.0 - 0.5 * 2.0 * 100f64.ln();
        assert_abs_diff_eq!(v, -54.6052, epsilon = 1e-4);
    }

    #[test]
    fn gprior_closed_form() {
        assert_eq!(gprior_formula(47, 0, 47.0, 0.0), 0.0);
        let v = gprior_formula(47, 1, 47.0, 0.5);
        assert_abs_diff_eq!(v, 22.5 * 48f64.ln() - 23.0 * 24.5f64.ln(), epsilon = 1e-12);
        // frozen from an independent evaluation
        assert_abs_diff_eq!(v, 13.532_541_041_761_874, epsilon = 1e-9);
    }

    #[test]
    fn aic_values() {
        let empty = Model::empty(3).unwrap();
        assert_eq!(log_mlik_aic(0.0, &empty).unwrap().value, 0.0);
        let three = Model::full(3).unwrap();
        assert_eq!(log_mlik_aic(10.0, &three).unwrap().value, -8.0);
        assert!(log_mlik_aic(-1.0, &three).is_err());
    }

    #[test]
    fn gprior_monotonicity() {
        let mut last = f64::NEG_INFINITY;
        for i in 0..=100 {
            let v = gprior_formula(47, 3, 47.0, i as f64 / 100.0 * 0.99);
            assert!(v > last);
            last = v;
        }
        for p in 1..10 {
            assert!(gprior_formula(47, p + 1, 47.0, 0.4) < gprior_formula(47, p, 47.0, 0.4));
        }
    }
}
