//! Maximum-likelihood optimizers: full IRLS, gradient ascent, batch SGD,
//! subsampling IRLS and the composite S-IRLS-SGD.
//!
//! Gradient methods step along the per-observation mean log-likelihood, so
//! the step sizes do not need rescaling with `n`.

mod composite;
mod gradient;
mod irls;
mod schedule;
mod sirls;

pub(crate) use composite::s_irls_sgd_coefficients;
pub use composite::{s_irls_sgd, s_irls_sgd_with, SgdPhase, SirlsSgdConfig, WarmStart};
pub use gradient::{bsgd, bsgd_path, gd, gd_path, scaled_batch_score};
pub use irls::{irls, irls_with, IrlsOptions};
pub use schedule::{CoolingSchedule, StepSchedule};
pub use sirls::{s_irls, s_irls_with, RandomSubsampler, SamplingWeights, SirlsConfig, SirlsRun, Subsampler};

use serde::Serialize;

use crate::glm::{self, Coefficients, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimResult {
    pub beta: Coefficients,
    pub deviance_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub full_data_deviance: f64,
    pub full_data_loglik: f64,
}

impl OptimResult {
    pub(crate) fn finish(data: &Dataset, beta: Vec<f64>, deviance_trace: Vec<f64>, converged: bool) -> Self {
        let full_data_deviance = glm::deviance_unchecked(data, &beta);
        let full_data_loglik = glm::log_likelihood_from_deviance(data, full_data_deviance);
        OptimResult {
            iterations: deviance_trace.len(),
            beta: Coefficients::from_vec_unchecked(beta),
            deviance_trace,
            converged,
            full_data_deviance,
            full_data_loglik,
        }
    }
}

pub(crate) fn model_label(data: &Dataset) -> String {
    data.names().join("+")
}

#[inline]
pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
