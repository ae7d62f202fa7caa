use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub per_covariate: Vec<f64>,
    pub mean: f64,
}

/// Per-covariate `√(Σ_k (p̂_k − p)² / K)` over `K` runs, plus its mean.
pub fn rmse(estimates: &[Vec<f64>], truth: &[f64]) -> Result<RmseReport> {
    if estimates.is_empty() {
        return Err(Error::invalid("rmse needs at least one run"));
    }
    if let Some(bad) = estimates.iter().find(|e| e.len() != truth.len()) {
        return Err(Error::invalid(format!(
            "run has {} entries, truth has {}",
            bad.len(),
            truth.len()
        )));
    }
    let k = estimates.len() as f64;
    let per_covariate: Vec<f64> = (0..truth.len())
        .map(|j| {
            let ss: f64 = estimates.iter().map(|e| (e[j] - truth[j]).powi(2)).sum();
            (ss / k).sqrt()
        })
        .collect();
    let mean = if truth.is_empty() { 0.0 } else { per_covariate.iter().sum::<f64>() / truth.len() as f64 };
    Ok(RmseReport { per_covariate, mean })
}

pub fn mean_abs_error(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}
