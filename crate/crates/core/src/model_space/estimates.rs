use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{Model, ModelPrior, VisitedModelStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    /// Renormalized over the models with an evidence estimate.
    RM,
    /// Visit frequencies of the chain.
    MC,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorEstimates {
    pub p: usize,
    pub model_probs: BTreeMap<Model, f64>,
    pub inclusion_probs: Vec<f64>,
    pub estimator: Estimator,
}

impl PosteriorEstimates {
    pub fn prob(&self, model: &Model) -> f64 {
        self.model_probs.get(model).copied().unwrap_or(0.0)
    }
}

/// Sums model masses over the models that include each covariate.
pub fn inclusion_probabilities(est: &PosteriorEstimates) -> Vec<f64> {
    inclusion_from(est.p, &est.model_probs)
}

fn inclusion_from(p: usize, probs: &BTreeMap<Model, f64>) -> Vec<f64> {
    let mut inc = vec![0.0; p];
    for (m, &w) in probs {
        for (j, v) in inc.iter_mut().enumerate() {
            if m.includes(j) {
                *v += w;
            }
        }
    }
    inc.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    inc
}

/// Normalizes unnormalized log posterior masses. Models at `-∞` are
/// dropped.
pub fn estimates_from_log_mass(
    p: usize,
    log_mass: impl IntoIterator<Item = (Model, f64)>,
    estimator: Estimator,
) -> Result<PosteriorEstimates> {
    let pairs: Vec<(Model, f64)> = log_mass.into_iter().filter(|(_, v)| *v > f64::NEG_INFINITY).collect();
    if pairs.is_empty() {
        return Err(Error::invalid("no model has a finite posterior mass"));
    }
    if pairs.iter().any(|(_, v)| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::invalid("posterior masses must not be NaN or +inf"));
    }
    // Shift by the max and divide, rather than subtracting the log-sum-exp,
    // so ties normalize exactly.
    let max = pairs.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = pairs.iter().map(|(_, v)| (v - max).exp()).sum();
    let model_probs: BTreeMap<Model, f64> = pairs.into_iter().map(|(m, v)| (m, (v - max).exp() / s)).collect();
    let inclusion_probs = inclusion_from(p, &model_probs);
    Ok(PosteriorEstimates { p, model_probs, inclusion_probs, estimator })
}

/// Renormalized estimator over the stored best evidences.
pub fn rm_estimates(store: &VisitedModelStore, prior: &ModelPrior) -> Result<PosteriorEstimates> {
    if store.is_empty() {
        return Err(Error::invalid("store is empty"));
    }
    estimates_from_log_mass(
        store.p(),
        store.iter().map(|(m, e)| (*m, e.best_log_evidence + prior.log_prior(*m))),
        Estimator::RM,
    )
}

/// Empirical visit frequencies over a chain trace.
pub fn mc_estimates(trace: &[Model]) -> Result<PosteriorEstimates> {
    let first = trace.first().ok_or_else(|| Error::invalid("trace is empty"))?;
    let p = first.p();
    let mut counts: HashMap<Model, usize> = HashMap::new();
    for m in trace {
        *counts.entry(*m).or_insert(0) += 1;
    }
    let t = trace.len() as f64;
    let model_probs: BTreeMap<Model, f64> = counts.into_iter().map(|(m, c)| (m, c as f64 / t)).collect();
    let inclusion_probs = inclusion_from(p, &model_probs);
    Ok(PosteriorEstimates { p, model_probs, inclusion_probs, estimator: Estimator::MC })
}

/// Running inclusion estimates of a trace: MC frequencies after each step.
pub(crate) struct McAccumulator {
    counts: Vec<u64>,
    steps: u64,
}

impl McAccumulator {
    pub fn new(p: usize) -> Self {
        McAccumulator { counts: vec![0; p], steps: 0 }
    }

    pub fn push(&mut self, m: Model) {
        self.steps += 1;
        for (j, c) in self.counts.iter_mut().enumerate() {
            if m.includes(j) {
                *c += 1;
            }
        }
    }

    pub fn inclusion(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.steps.max(1) as f64).collect()
    }
}
