use super::{model_label, OptimResult};
use crate::error::{Error, Result};
use crate::glm::{self, Dataset, GlmState, WeightVariant};
use crate::linalg::wls_solve;

#[derive(Debug, Clone)]
pub struct IrlsOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub variant: WeightVariant,
    /// Diagonal added to `XᵀWX`; turns the fit into a ridge-penalized mode.
    pub ridge: Option<Vec<f64>>,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions { tol: 1e-8, max_iter: 100, variant: WeightVariant::Fisher, ridge: None }
    }
}

/// Full-data IRLS with the standard Fisher weights.
pub fn irls(data: &Dataset, tol: f64, max_iter: usize) -> Result<OptimResult> {
    irls_with(data, &IrlsOptions { tol, max_iter, ..IrlsOptions::default() })
}

pub fn irls_with(data: &Dataset, opts: &IrlsOptions) -> Result<OptimResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    if let Some(r) = &opts.ridge {
        if r.len() != data.m() || r.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("ridge must be nonnegative with one entry per column"));
        }
    }
    let n = data.n();
    let family = data.family();
    let rows: Vec<usize> = (0..n).collect();
    let ridge = opts.ridge.as_deref();
    let penalty = |beta: &[f64]| -> f64 {
        ridge.map_or(0.0, |r| r.iter().zip(beta).map(|(l, b)| l * b * b).sum())
    };

    let eta0: Vec<f64> = data.y().iter().map(|&y| family.link(family.initial_mean(y))).collect();
    let mut st = GlmState::from_eta(family, eta0, data.y().iter().copied(), opts.variant);
    let mut beta: Option<Vec<f64>> = None;
    let mut obj_prev = f64::INFINITY;
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..opts.max_iter {
        let mut next = wls_solve(data, &rows, &st.w, &st.z, ridge).ok_or_else(|| Error::RankDeficient {
            model: model_label(data),
            detail: "XᵀWX is singular".into(),
        })?;
        let mut dev = glm::deviance_unchecked(data, &next);
        let mut obj = dev + penalty(&next);
        // Step halving guards the logistic fit against overshoot.
        if let Some(prev) = &beta {
            let mut halvings = 0;
            while !(obj.is_finite() && obj <= obj_prev * (1.0 + 1e-12) + 1e-12) && halvings < 30 {
                for (b, p) in next.iter_mut().zip(prev) {
                    *b = 0.5 * (*b + p);
                }
                dev = glm::deviance_unchecked(data, &next);
                obj = dev + penalty(&next);
                halvings += 1;
            }
        }
        if !next.iter().all(|b| b.is_finite()) || !dev.is_finite() {
            return Err(Error::Divergence {
                iteration: trace.len() + 1,
                last_finite: beta.unwrap_or_default(),
            });
        }
        trace.push(dev);
        obj_prev = obj;

        let grad = match ridge {
            None => glm::score(data, &next)?,
            Some(r) => {
                let mut g = glm::unit_score(data, &next)?;
                for ((g, l), b) in g.iter_mut().zip(r).zip(&next) {
                    *g -= l * b;
                }
                g
            }
        };
        let done = grad.iter().all(|g| g.abs() < opts.tol);
        let eta: Vec<f64> = (0..n).map(|i| data.eta(i, &next)).collect();
        st = GlmState::from_eta(family, eta, data.y().iter().copied(), opts.variant);
        beta = Some(next);
        if done {
            converged = true;
            break;
        }
    }
    let beta = beta.ok_or_else(|| Error::invalid("max_iter must be at least 1"))?;
    Ok(OptimResult::finish(data, beta, trace, converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::Family;

    #[test]
    fn gaussian_one_step() {
        let cov = [0.1, 1.3, -0.4, 2.2, 0.9, -1.1];
        let y = vec![0.3, 2.1, -0.2, 3.9, 1.0, -1.6];
        let d = Dataset::with_intercept(&cov, 1, y, Family::GaussianIdentity).unwrap();
        let r = irls(&d, 1e-8, 10).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
    }

    #[test]
    fn duplicated_column_errors() {
        let x = vec![1.0, 0.3, 0.3, 1.0, -1.2, -1.2, 1.0, 2.0, 2.0, 1.0, 0.7, 0.7];
        let d = Dataset::new(x, vec![1.0, 2.0, 0.5, 0.1], 3, Family::GaussianIdentity).unwrap();
        assert!(matches!(irls(&d, 1e-8, 10), Err(Error::RankDeficient { .. })));
    }
}
