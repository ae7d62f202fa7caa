//! Models as inclusion bit vectors, model priors, exact enumeration, the
//! renormalized (RM) and visit-frequency (MC) posterior estimators, and the
//! best-evidence visit store.

mod estimates;
pub mod math;
mod model;
mod store;

pub use estimates::{
    estimates_from_log_mass, inclusion_probabilities, mc_estimates, rm_estimates, Estimator, PosteriorEstimates,
};
pub(crate) use estimates::McAccumulator;
pub use model::{model_log_prior, Model, ModelPrior, MAX_P};
pub use store::{StoreEntry, VisitedModelStore};

use crate::error::{Error, Result};
use crate::evidence::{evaluate_selected, EvidenceSpec, Fitter};
use crate::glm::Dataset;
use crate::par::{map_indexed, Execution};
use crate::rng::stream_rng;

/// Largest `p` enumerated without an explicit override.
pub const ENUMERATION_GUARD: usize = 25;

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub allow_large: bool,
    pub exec: Execution,
    /// Seeds stochastic fitters; model `m` uses stream `m.bits()`.
    pub seed: u64,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions { allow_large: false, exec: Execution::Parallel, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub estimates: PosteriorEstimates,
    /// Log evidence indexed by model bits; `-∞` where the fit failed.
    pub log_evidence: Vec<f64>,
    pub failures: usize,
}

/// Log evidence of every model, indexed by bits.
pub fn enumerate_log_evidence(
    data: &Dataset,
    spec: &EvidenceSpec,
    fitter: &Fitter,
    opts: &EnumerateOptions,
) -> Result<Vec<f64>> {
    let p = data.p();
    if p > ENUMERATION_GUARD && !opts.allow_large {
        return Err(Error::EnumerationGuard { p, limit: ENUMERATION_GUARD });
    }
    if p >= 40 {
        return Err(Error::invalid(format!("2^{p} models cannot be held in memory")));
    }
    spec.validate(data.family())?;
    let count = 1usize << p;
    Ok(map_indexed(opts.exec, count, |bits| {
        let model = Model::from_bits(bits as u64, p).expect("bits < 2^p");
        let sub = match data.select_columns(&model.active_columns()) {
            Ok(s) => s,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut rng = stream_rng(opts.seed, bits as u64);
        evaluate_selected(&sub, &model, spec, fitter, None, &mut rng)
            .map(|e| e.log_evidence)
            .unwrap_or(f64::NEG_INFINITY)
    }))
}

/// Posterior over all models from per-model log evidence (indexed by bits).
pub fn estimates_from_log_evidence(p: usize, log_evidence: &[f64], prior: &ModelPrior) -> Result<PosteriorEstimates> {
    if log_evidence.len() != 1usize << p {
        return Err(Error::invalid("log evidence must cover all 2^p models"));
    }
    estimates_from_log_mass(
        p,
        log_evidence.iter().enumerate().map(|(bits, &v)| {
            let m = Model::from_bits(bits as u64, p).expect("bits < 2^p");
            (m, v + prior.log_prior(m))
        }),
        Estimator::RM,
    )
}

/// Exact posterior by evaluating every model.
pub fn enumerate_all(
    data: &Dataset,
    prior: &ModelPrior,
    spec: &EvidenceSpec,
    fitter: &Fitter,
    opts: &EnumerateOptions,
) -> Result<Enumeration> {
    let log_evidence = enumerate_log_evidence(data, spec, fitter, opts)?;
    let failures = log_evidence.iter().filter(|v| !v.is_finite()).count();
    let estimates = estimates_from_log_evidence(data.p(), &log_evidence, prior)?;
    Ok(Enumeration { estimates, log_evidence, failures })
}
